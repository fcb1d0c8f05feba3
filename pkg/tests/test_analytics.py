import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from coalesce.analytics import (
    DiscreteDistribution,
    HittingProfile,
    StaysInfiniteError,
    alternating_log_sum,
    beta_renewal,
    expected_depth,
    expected_hitting_time,
    expected_hitting_times,
    fixation_occupancy,
    hitting_asymptote,
    hitting_prob_finite,
    hitting_prob_limit,
    hitting_profile_finite,
    hitting_profile_limit,
    last_coalescence_finite,
    last_coalescence_gf,
    last_coalescence_limit,
    last_coalescence_limit_dist,
    record_gf,
    record_prob,
    record_probs,
    reversed_transition,
)
from coalesce.rates import LambdaMeasure, block_rate, total_rate


# -- brute-force oracles on the block counting chain ---------------------------


def chain_oracle(rate, total, n):
    """Forward DP over the embedded chain started at n.

    Returns (hit, last, mean_time): hit[j] = P(j visited), last[j] = P(last
    merger starts from j), mean_time[j] = E(time to reach <= j blocks).
    Works with floats or Fractions, whatever ``rate``/``total`` return.
    """
    zero = rate(2, 1) * 0
    hit = {n: zero + 1}
    for b in range(n, 1, -1):
        hb = hit.get(b, zero)
        for i in range(1, b):
            hit[i] = hit.get(i, zero) + hb * rate(b, i) / total(b)
    last = {j: hit[j] * rate(j, 1) / total(j) for j in range(2, n + 1)}
    mean_time = {}
    for j in range(1, n + 1):
        t = {b: zero for b in range(1, j + 1)}
        for b in range(j + 1, n + 1):
            t[b] = (1 + sum(rate(b, i) * t[i] for i in range(1, b))) / total(b)
        mean_time[j] = t[n]
    return hit, last, mean_time


def bs_rate(j, i):
    return Fraction(j, (j - i) * (j - i + 1))


def bs_total(j):
    return Fraction(j - 1)


@pytest.fixture(scope="module")
def bs_exact():
    return chain_oracle(bs_rate, bs_total, 25)


def test_hitting_profile_against_exact_rationals(bs_exact):
    hit, _, _ = bs_exact
    prof = hitting_profile_finite(1.0, 25)
    for j in range(2, 26):
        assert prof[j] == pytest.approx(float(hit[j]), rel=1e-12)
        assert hitting_prob_finite(1.0, 25, j) == pytest.approx(float(hit[j]), rel=1e-12)


def test_last_coalescence_against_exact_rationals(bs_exact):
    _, last, _ = bs_exact
    assert sum(last.values()) == 1
    dist = last_coalescence_finite(1.0, 25)
    for j in range(2, 26):
        assert dist[j] == pytest.approx(float(last[j]), rel=1e-12)


def test_hitting_times_against_exact_rationals(bs_exact):
    _, _, mean_time = bs_exact
    h = expected_hitting_times(1.0, 25)
    for j in range(1, 26):
        assert expected_hitting_time(1.0, j, 25) == pytest.approx(float(mean_time[j]), rel=1e-12)
        assert h[j] == pytest.approx(float(mean_time[j]), rel=1e-12, abs=1e-15)


def test_three_blocks_by_hand():
    # from 3 blocks at alpha = 1: rate 2 out, 3 -> 1 with probability 1/4
    assert last_coalescence_finite(1.0, 3)[3] == pytest.approx(0.25)
    assert expected_hitting_time(1.0, 1, 3) == pytest.approx(0.5 + 0.75, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.4, 1.3, 1.8])
def test_beta_chain_quantities_against_float_dp(alpha):
    n = 30
    hit, last, mean_time = chain_oracle(
        lambda j, i: block_rate(alpha, j, i), lambda j: total_rate(alpha, j), n
    )
    prof = hitting_profile_finite(alpha, n)
    dist = last_coalescence_finite(alpha, n)
    for j in range(2, n + 1):
        assert prof[j] == pytest.approx(hit[j], rel=1e-10)
        assert dist[j] == pytest.approx(last[j], rel=1e-10)
    for j in (1, 2, 7, 29):
        assert expected_hitting_time(alpha, j, n) == pytest.approx(mean_time[j], rel=1e-10)


def test_generic_measure_chain_quantities():
    tri = LambdaMeasure.from_density(
        lambda x: np.where(x < 0.5, 4 * x, 4 - 4 * x), breakpoints=[0.5], label="triangle"
    )
    n = 12
    hit, last, mean_time = chain_oracle(
        lambda j, i: block_rate(tri, j, i), lambda j: total_rate(tri, j), n
    )
    prof = hitting_profile_finite(tri, n)
    dist = last_coalescence_finite(tri, n)
    for j in range(2, n + 1):
        assert prof[j] == pytest.approx(hit[j], rel=1e-9)
        assert dist[j] == pytest.approx(last[j], rel=1e-9)
    assert expected_hitting_time(tri, 1, n) == pytest.approx(mean_time[1], rel=1e-9)
    assert expected_hitting_times(tri, n)[3] == pytest.approx(mean_time[3], rel=1e-9)


# -- renewal and fixation line -------------------------------------------------


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_occupancy_is_shifted_renewal(alpha):
    u = beta_renewal(alpha, 60).u
    for start in (1, 5):
        p = fixation_occupancy(alpha, start, 60)
        assert np.all(p[:start] == 0)
        assert p[start:] == pytest.approx(u[: 61 - start], rel=1e-14)


def test_generic_occupancy_matches_beta():
    c = special.beta(1.5, 0.5)
    m = LambdaMeasure.from_density(lambda x, xc: x**0.5 * xc**-0.5 / c, complement=True)
    assert fixation_occupancy(m, 2, 40) == pytest.approx(fixation_occupancy(0.5, 2, 40), rel=1e-9)


@pytest.mark.parametrize("alpha", [1.5, 1.8])
def test_renewal_limit_is_inverse_mean(alpha):
    # the interarrival law has mean 1/(alpha - 1) when alpha > 1
    u = beta_renewal(alpha, 20000).u
    assert u[-1] == pytest.approx(alpha - 1, rel=2e-2)


# -- records and depth ----------------------------------------------------------


def test_record_closed_form_half():
    p = record_probs(0.5, 300)
    for i in range(2, 301):
        assert p[i - 2] == pytest.approx(0.5 * (1 / (2 * i - 3) + (i == 2)), rel=1e-12)


def test_record_closed_form_three_halves():
    p = record_probs(1.5, 300)
    for i in range(2, 301):
        tail = 0.75 * math.exp(math.lgamma(1.5) + math.lgamma(i - 1) - math.lgamma(i + 0.5))
        assert p[i - 2] == pytest.approx(1.5 / ((2 * i - 1) * (2 * i - 3)) + tail, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.6])
def test_two_is_always_a_record(alpha):
    assert record_prob(alpha, 2) == 1.0
    p = record_probs(alpha, 50)
    assert np.all((p > 0) & (p <= 1))
    assert record_prob(alpha, 17) == pytest.approx(p[15], rel=1e-14)


@pytest.mark.parametrize("alpha", [1.01, 1.2, 1.5, 1.8, 1.99])
def test_expected_depth_digamma_form(alpha):
    # E(tau_1) = alpha * (digamma(1/(alpha-1) + 1) + Euler gamma)
    p = 1 / (alpha - 1)
    assert expected_depth(alpha) == pytest.approx(alpha * (special.digamma(p + 1) + np.euler_gamma), rel=1e-10)


def test_expected_depth_three_halves():
    assert abs(expected_depth(1.5) - 2.25) <= 1e-6


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_depth_is_infinite_without_coming_down(alpha):
    with pytest.raises(StaysInfiniteError):
        expected_depth(alpha)
    assert record_gf(alpha, 1.0) == math.inf


def test_finite_depth_increases_to_limit():
    vals = [expected_hitting_time(1.5, 1, n) for n in (10, 100, 1000, 10000)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 2.25
    assert 2.25 - vals[-1] < 2.25 - vals[-2]


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("s", [0.3, 0.7])
def test_record_gf_matches_series(alpha, s):
    p = record_probs(alpha, 400)
    series = math.fsum(p * s ** np.arange(2, 401))
    assert record_gf(alpha, s) == pytest.approx(series, rel=1e-10)
    assert record_gf(alpha, 0.0) == 0.0


def test_record_gf_at_one_is_depth():
    assert record_gf(1.5, 1.0) == pytest.approx(2.25, rel=1e-10)


# -- last coalescence -----------------------------------------------------------


def test_alternating_sum_small_cases():
    assert alternating_log_sum(2) == pytest.approx(math.log(2), rel=1e-15)
    assert alternating_log_sum(3) == pytest.approx((2 * math.log(2) - math.log(3)) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        alternating_log_sum(1)


@pytest.mark.parametrize("j", [2, 3, 10, 40, 120, 400])
def test_bs_limit_quadrature_matches_alternating_sum(j):
    assert last_coalescence_limit(1.0, j) == pytest.approx(alternating_log_sum(j), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_last_coalescence_limit_is_a_distribution(alpha):
    assert last_coalescence_gf(alpha, 1.0) == pytest.approx(1.0, rel=1e-9)
    dist = last_coalescence_limit_dist(alpha, 60)
    assert isinstance(dist, DiscreteDistribution)
    for s in (0.3, 0.8):
        assert last_coalescence_gf(alpha, s) == pytest.approx(dist.gf(s), rel=1e-8, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_finite_last_coalescence_converges(alpha):
    limit = np.array([last_coalescence_limit(alpha, j) for j in range(2, 21)])
    gaps = []
    for n in (10, 100, 1000, 10000):
        fin = last_coalescence_finite(alpha, n, jmax=min(n, 20))
        assert fin.truncation_mass >= 0
        p = np.zeros(19)
        p[: fin.probabilities.size] = fin.probabilities
        gaps.append(np.max(np.abs(p - limit)))
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3]
    assert gaps[-1] < 1e-2


def test_truncation_bookkeeping():
    full = last_coalescence_finite(0.8, 40)
    cut = last_coalescence_finite(0.8, 40, jmax=10)
    assert full.truncation_mass == 0.0
    assert cut.probabilities == pytest.approx(full.probabilities[:9])
    assert cut.truncation_mass == pytest.approx(full.probabilities[9:].sum(), abs=1e-12)
    assert cut[11] == 0.0 and list(cut.support) == list(range(2, 11))
    with pytest.raises(ValueError):
        DiscreteDistribution(2, np.array([0.5, 0.2]))


# -- hitting probabilities ---------------------------------------------------


def test_hitting_limit_closed_value():
    assert hitting_prob_limit(0.5, 2) == pytest.approx(5 / 12, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_hitting_limit_relates_to_last_coalescence(alpha):
    # lim P(j in R) * P_{j1} = lim P~_{1j}, and P_{j1} -> stays positive for small j
    for j in (2, 5, 12):
        p_j1 = block_rate(alpha, j, 1) / total_rate(alpha, j)
        assert hitting_prob_limit(alpha, j) * p_j1 == pytest.approx(
            last_coalescence_limit(alpha, j), rel=1e-9
        )


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_finite_hitting_converges_to_limit(alpha):
    lim = hitting_profile_limit(alpha, 15)
    fin = hitting_profile_finite(alpha, 20000)
    assert isinstance(lim, HittingProfile) and lim.j_max == 15
    for j in range(2, 16):
        assert fin[j] == pytest.approx(lim[j], abs=5e-3)


def test_hitting_limit_far_out():
    # reference from 40-digit quadrature of the same integral (done offline)
    assert hitting_prob_limit(1.5, 1000) == pytest.approx(0.517839011145854, rel=1e-12)
    assert hitting_prob_limit(1.5, 10**4) == pytest.approx(0.50564182531222, rel=1e-12)


def test_hitting_asymptotes():
    ratios = [hitting_prob_limit(1.5, j) / hitting_asymptote(1.5, j) for j in (10, 100, 1000, 10**4)]
    assert all(a > b > 1 for a, b in zip(ratios, ratios[1:]))
    # the correction decays like 1/sqrt(j) at alpha = 3/2
    assert (ratios[-2] - 1) / (ratios[-1] - 1) == pytest.approx(math.sqrt(10), rel=0.02)
    r_small = hitting_prob_limit(0.5, 100) / hitting_asymptote(0.5, 100)
    r_large = hitting_prob_limit(0.5, 10**4) / hitting_asymptote(0.5, 10**4)
    assert abs(r_large - 1) < abs(r_small - 1) and abs(r_large - 1) < 0.02
    assert hitting_asymptote(1.0, 100) == pytest.approx(1 / math.log(100))
    with pytest.raises(ValueError):
        hitting_asymptote(1.5, 1)


@given(st.sampled_from([0.5, 1.0, 1.5]), st.integers(3, 30), st.data())
def test_reversed_chain_rows_sum_to_one(alpha, n, data):
    i = data.draw(st.integers(1, n - 1))
    row = [reversed_transition(alpha, n, i, j) for j in range(i + 1, n + 1)]
    assert math.fsum(row) == pytest.approx(1.0, abs=1e-10)
    assert min(row) >= 0


def test_reversed_chain_from_one_is_last_coalescence():
    dist = last_coalescence_finite(1.3, 15)
    for j in range(2, 16):
        assert reversed_transition(1.3, 15, 1, j) == pytest.approx(dist[j], rel=1e-10)


def test_argument_checks():
    for call in (
        lambda: last_coalescence_finite(1.0, 1),
        lambda: last_coalescence_limit(1.0, 1),
        lambda: hitting_prob_limit(1.0, 1),
        lambda: hitting_prob_finite(1.0, 10, 11),
        lambda: expected_hitting_time(1.0, 5, 4),
        lambda: reversed_transition(1.0, 5, 3, 3),
        lambda: record_gf(1.5, 1.2),
        lambda: expected_depth(2.5),
        lambda: record_prob(1.0, 1),
    ):
        with pytest.raises(ValueError):
            call()
    assert expected_hitting_time(1.0, 4, 4) == 0.0


# -- identities and worked values ----------------------------------------------


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, "triangle"])
def test_records_telescope_to_hitting_time(alpha):
    m = (
        LambdaMeasure.from_density(
            lambda x: np.where(x < 0.5, 4 * x, 4 - 4 * x), breakpoints=[0.5], label="triangle"
        )
        if alpha == "triangle"
        else alpha
    )
    n = 40 if alpha == "triangle" else 300
    p = record_probs(m, n)
    for k in (2, 7, n):
        assert math.fsum(p[: k - 1]) == pytest.approx(expected_hitting_time(m, 1, k), abs=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("n", [2, 10, 100, 1000])
def test_depth_as_sum_over_visited_states(alpha, n):
    prof = hitting_profile_finite(alpha, n)
    total = math.fsum(prof[j] / total_rate(alpha, j) for j in range(2, n + 1))
    assert total == pytest.approx(expected_hitting_time(alpha, 1, n), abs=1e-8)


def test_expected_depth_decreases_in_alpha():
    grid = np.linspace(1.01, 1.99, 50)
    depth = np.array([expected_depth(a) for a in grid])
    assert np.all(np.diff(depth) < 0)
    assert record_gf(1.01, 1.0) == pytest.approx(expected_depth(1.01), abs=1e-6)
    # divergence as alpha -> 1 is logarithmic: about log 10 more per decade
    steps = np.diff([expected_depth(1 + 10.0**-k) for k in (3, 4, 5)])
    assert steps == pytest.approx(math.log(10), rel=0.005)


def test_small_worked_values():
    assert record_prob(1.0, 3) == pytest.approx(0.25, rel=1e-14)
    assert record_prob(0.5, 3) == pytest.approx(1 / 6, rel=1e-14)
    assert record_prob(1.5, 2) == 1.0
    assert expected_hitting_time(1.0, 1, 2) == pytest.approx(1.0, rel=1e-14)
    assert expected_hitting_time(1.0, 2, 3) == pytest.approx(0.5, rel=1e-14)
    two = last_coalescence_finite(0.7, 2)
    assert two[2] == 1.0 and list(two.support) == [2]
    three = last_coalescence_finite(1.0, 3)
    assert three[2] == pytest.approx(0.75, rel=1e-14)
    assert math.fsum(last_coalescence_finite(0.5, 10).probabilities) == pytest.approx(1.0, abs=1e-8)
    assert last_coalescence_limit(1.0, 2) == pytest.approx(0.6931472, abs=1e-7)
    assert last_coalescence_limit(1.0, 3) == pytest.approx(0.1438410, abs=1e-7)
    assert hitting_prob_limit(1.0, 2) == pytest.approx(math.log(2), rel=1e-10)
    assert hitting_prob_finite(1.0, 3, 3) == 1.0
    assert hitting_prob_finite(1.0, 3, 2) == pytest.approx(0.75, rel=1e-14)
    assert reversed_transition(1.0, 3, 2, 3) == pytest.approx(1.0, rel=1e-14)
    assert hitting_asymptote(1.5, 7) == pytest.approx(0.5, rel=1e-14)
    assert hitting_asymptote(0.5, 10**4) == pytest.approx(0.0028209, abs=1e-7)
    assert hitting_asymptote(1.0, 10**4) == pytest.approx(0.10857, abs=1e-5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_hitting_profile_balances_through_the_chain(alpha):
    n = 20
    prof = hitting_profile_finite(alpha, n)
    for i in range(2, n):
        inflow = math.fsum(
            prof[j] * block_rate(alpha, j, i) / total_rate(alpha, j) for j in range(i + 1, n + 1)
        )
        assert inflow == pytest.approx(prof[i], abs=1e-8)
