"""Exact laws for records, depth, last coalescence and hitting probabilities.

Beta(2 - alpha, alpha) measures go through the renewal sequence of the
translated fixation-line range; generic measures fall back on dynamic
programming over the fixation-line jump chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np
from scipy.special import gammaln

from coalesce.numerics import RenewalSequence, integrate_01, log_gamma_ratio, renewal_sequence
from coalesce.rates import (
    RateTable,
    as_measure,
    interarrival,
)

__all__ = [
    "DiscreteDistribution",
    "HittingProfile",
    "StaysInfiniteError",
    "alternating_log_sum",
    "beta_renewal",
    "expected_depth",
    "expected_hitting_time",
    "expected_hitting_times",
    "fixation_occupancy",
    "hitting_asymptote",
    "hitting_prob_finite",
    "hitting_prob_limit",
    "hitting_profile_finite",
    "hitting_profile_limit",
    "last_coalescence_finite",
    "last_coalescence_gf",
    "last_coalescence_limit",
    "last_coalescence_limit_dist",
    "record_gf",
    "record_prob",
    "record_probs",
    "reversed_transition",
]

QUAD_TOL = 1e-13


class StaysInfiniteError(ValueError):
    """The requested expectation is infinite (alpha <= 1: no coming down)."""


@dataclass(frozen=True)
class DiscreteDistribution:
    """Law on support_start, support_start + 1, ... with explicit truncation."""

    support_start: int
    probabilities: np.ndarray
    truncation_mass: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if np.any(p < 0):
            raise ValueError("negative probability")
        if abs(math.fsum(p) + self.truncation_mass - 1) > 1e-8:
            raise ValueError("probabilities + truncation_mass must sum to 1")

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_start, self.support_start + self.probabilities.size)

    def __getitem__(self, j: int) -> float:
        k = j - self.support_start
        if 0 <= k < self.probabilities.size:
            return float(self.probabilities[k])
        return 0.0

    def gf(self, s: float) -> float:
        """Truncated generating function sum_j p_j s^j."""
        return math.fsum(self.probabilities * s ** self.support.astype(float))


@dataclass(frozen=True)
class HittingProfile:
    """P(j in R^n) for j = 2..j_max; n is an int or "limit"."""

    n: int | str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError("hitting probabilities must lie in [0, 1]")

    @property
    def j_max(self) -> int:
        return self.values.size + 1

    def __getitem__(self, j: int) -> float:
        return float(self.values[j - 2])


# -- renewal sequence ---------------------------------------------------------

_renewal_cache: dict[float, RenewalSequence] = {}


def beta_renewal(alpha: float, m_max: int) -> RenewalSequence:
    """u_k = P(k in S) for the Beta(2 - alpha, alpha) fixation line, k <= m_max."""
    alpha = float(alpha)
    seq = _renewal_cache.get(alpha)
    if seq is None or seq.m_max < m_max:
        size = max(m_max, 2 * seq.m_max if seq else 0, 64)
        seq = renewal_sequence(lambda j: interarrival(alpha, j), size, alpha=alpha)
        _renewal_cache[alpha] = seq
    return RenewalSequence(alpha, seq.u[: m_max + 1])


def _totals(m, n):
    m = as_measure(m)
    if m.is_beta:
        t = np.full(n + 2, np.nan)
        j = np.arange(2, n + 2)
        t[2:] = np.exp(log_gamma_ratio(m.alpha - 1, -1, base=j) - gammaln(m.alpha + 1))
        return t
    return RateTable(m, max(n + 1, 2)).totals(n + 1)


def _lambda_j1(m, j):
    """Lambda_{j,1} for an array of j >= 2."""
    m = as_measure(m)
    j = np.asarray(j)
    if m.is_beta:
        a = m.alpha
        return np.exp(log_gamma_ratio(-a, 0, base=j) - gammaln(2 - a))
    vals = [m.integrate(lambda x, xc, k=k: x ** (k - 2)) for k in np.atleast_1d(j)]
    return np.array(vals).reshape(j.shape)


# -- fixation line occupancy and hitting times ------------------------------


def fixation_occupancy(m, start: int, upto: int) -> np.ndarray:
    """p[i] = P(i in S_start) for i = 0..upto (zero below start)."""
    m = as_measure(m)
    p = np.zeros(upto + 1)
    if start > upto:
        return p
    if m.is_beta:
        p[start:] = beta_renewal(m.alpha, upto - start).u
        return p
    table = RateTable(m, upto + 1)
    p[start] = 1.0
    for i in range(start, upto):
        if p[i] == 0:
            continue
        row = table.fixation_row(i, upto) / table.total(i + 1)
        p[i + 1 :] += p[i] * row
    return p


def expected_hitting_time(m, j: int, n: int) -> float:
    """E(alpha_j^n) = sum_{i=j}^{n-1} P(i in S_j) / Lambda_{i+1}."""
    if not 1 <= j <= n:
        raise ValueError("need 1 <= j <= n")
    if j == n:
        return 0.0
    occ = fixation_occupancy(m, j, n - 1)
    lam = _totals(m, n)
    return math.fsum(occ[j:n] / lam[j + 1 : n + 1])


def expected_hitting_times(m, n: int) -> np.ndarray:
    """h[j] = E(alpha_j^n) for j = 0..n (h[0] unused, h[n] = 0).

    Backward first-step analysis on the fixation-line jump chain.
    """
    m = as_measure(m)
    lam = _totals(m, n)
    h = np.zeros(n + 1)
    if m.is_beta:
        u = beta_renewal(m.alpha, n).u
        inv = 1.0 / lam[2 : n + 1]  # 1/Lambda_{i+1}, i = 1..n-1
        for j in range(1, n):
            h[j] = np.dot(u[: n - j], inv[j - 1 :])
        return h
    table = RateTable(m, n + 1)
    for i in range(n - 1, 0, -1):
        row = table.fixation_row(i, n - 1) if i < n - 1 else np.empty(0)
        h[i] = (1.0 + np.dot(row, h[i + 1 : n])) / lam[i + 1]
    return h


def _depth_increments(m, n: int, jmax: int) -> np.ndarray:
    """D[j] = E(alpha_{j-1}^n) - E(alpha_j^n) for j = 2..jmax (index j)."""
    m = as_measure(m)
    D = np.zeros(jmax + 1)
    if m.is_beta:
        a = m.alpha
        lam = _totals(m, n)
        i = np.arange(2, n)
        # 1/Lambda_i - 1/Lambda_{i+1} with Lambda_{i+1} - Lambda_i in closed form
        gap = np.exp(log_gamma_ratio(a - 1, 0, base=i) - gammaln(a))
        d = np.zeros(n + 1)
        d[2:n] = gap / (lam[2:n] * lam[3 : n + 1])
        u = beta_renewal(a, n).u
        for j in range(2, jmax + 1):
            D[j] = np.dot(u[: n - j], d[j:n]) + u[n - j] / lam[n]
        return D
    h = expected_hitting_times(m, n)
    D[2 : jmax + 1] = h[1:jmax] - h[2 : jmax + 1]
    return D


# -- records and depth ------------------------------------------------------


def record_probs(m, imax: int) -> np.ndarray:
    """P(i in T) for i = 2..imax (index i - 2)."""
    if imax < 2:
        return np.empty(0)
    occ = fixation_occupancy(m, 1, imax - 1)
    lam = _totals(m, imax)
    out = occ[1:imax] / lam[2 : imax + 1]
    out[0] = 1.0  # 2 in T almost surely
    return out


def record_prob(m, i: int) -> float:
    """P(i in T) = P(i - 1 in S_1) / Lambda_i."""
    if i < 2:
        raise ValueError("records are defined for i >= 2")
    return float(record_probs(m, i)[-1])


def _log1m(x, xc):
    """log(1 - x) given both x and xc = 1 - x."""
    return np.where(x < 0.5, np.log1p(-x), np.log(xc))


def _logx(x, xc):
    return np.where(xc < 0.5, np.log1p(-xc), np.log(x))


def expected_depth(alpha: float) -> float:
    """E(tau_1) for the Beta(2 - alpha, alpha) coalescent, alpha in (1, 2).

    Evaluated after the substitution 1 - x = v^{1/(alpha-1)}, which turns
    the endpoint singularity into the bounded integrand (1 - v^p)/(1 - v).
    """
    if not 1 < alpha < 2:
        if 0 < alpha <= 1:
            raise StaysInfiniteError(f"E(tau_1) is infinite for alpha={alpha}")
        raise ValueError("alpha must lie in (0, 2)")
    p = 1.0 / (alpha - 1.0)

    def f(v, vc):
        return -np.expm1(p * _logx(v, vc)) / vc

    return alpha * integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value


def record_gf(alpha: float, s: float) -> float:
    """sum_{i>=2} P(i in T) s^i for the Beta(2 - alpha, alpha) coalescent.

    At s = 1 this is E(tau_1): finite for alpha in (1, 2), ``inf`` otherwise.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    if s == 0:
        return 0.0
    if s == 1:
        return expected_depth(alpha) if alpha > 1 else math.inf
    if alpha == 1:

        def f(x, xc):
            return -x / ((1 - s * x) * np.log1p(-s * x))

        return s**3 * integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value

    a = alpha

    def f(x, xc):
        lsx = np.log1p(-s * x)
        # (1-sx)^a - (1-sx) written without cancellation near x = 0
        bracket = (1 - s * x) * np.expm1((a - 1) * lsx)
        return (1 - a) * x * np.exp((a - 1) * np.log(xc)) / bracket

    return a * s**3 * integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value


# -- last coalescence -------------------------------------------------------


def last_coalescence_finite(m, n: int, jmax: int | None = None) -> DiscreteDistribution:
    """Law of the number of blocks in the last merger of the n-coalescent.

    P~^n_{1j} = Lambda_{j,1} [E(alpha_{j-1}^n) - E(alpha_j^n)], j = 2..n.
    With ``jmax < n`` the rest of the mass is reported as truncation.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    jmax = n if jmax is None else min(jmax, n)
    D = _depth_increments(m, n, jmax)
    j = np.arange(2, jmax + 1)
    p = _lambda_j1(m, j) * D[2:]
    trunc = 0.0 if jmax == n else max(0.0, 1.0 - math.fsum(p))
    return DiscreteDistribution(2, p, trunc)


def _alpha_prefactor(alpha, j):
    # (-1)^{j-1} alpha C(alpha-1, j-1) = alpha Gamma(j-alpha) / (Gamma(1-alpha) Gamma(j));
    # the 1/(1-alpha) left over is folded into _kernel so both factors stay positive
    return alpha * np.exp(log_gamma_ratio(-alpha, 0, base=j) - gammaln(2 - alpha))


def _kernel(alpha):
    """x -> (1-alpha) / (1 - (1-x)^{1-alpha}), positive on (0, 1) for alpha != 1."""
    c = 1.0 - alpha

    def g(x, xc):
        return c / -np.expm1(c * _log1m(x, xc))

    return g


def _power(x, xc, e):
    return np.exp(e * _logx(x, xc))


def last_coalescence_limit(alpha: float, j: int) -> float:
    """lim_n P~^n_{1j} for the Beta(2 - alpha, alpha) coalescent."""
    if j < 2:
        raise ValueError("need j >= 2")
    if alpha == 1:

        def f(x, xc):
            return _power(x, xc, j - 1) / -_log1m(x, xc)

        return integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value / (j - 1)
    g = _kernel(alpha)
    val = integrate_01(
        lambda x, xc: _power(x, xc, j - 1) * g(x, xc),
        tol=0,
        rel_tol=QUAD_TOL,
        complement=True,
    ).value
    return float(_alpha_prefactor(alpha, j)) * val


def alternating_log_sum(j: int) -> float:
    """(1/(j-1)) sum_{k=1}^{j-1} C(j-1,k) (-1)^{k+1} log(k+1), the alpha = 1 limit law.

    Terms reach 2^{j-1} in size, so the sum runs in decimal arithmetic at a
    precision that grows with j.
    """
    if j < 2:
        raise ValueError("need j >= 2")
    with localcontext() as ctx:
        ctx.prec = int(0.31 * j) + 40
        total = Decimal(0)
        for k in range(1, j):
            term = math.comb(j - 1, k) * Decimal(k + 1).ln()
            total += term if k % 2 else -term
        return float(total / (j - 1))


def last_coalescence_limit_dist(alpha: float, jmax: int) -> DiscreteDistribution:
    p = np.array([last_coalescence_limit(alpha, j) for j in range(2, jmax + 1)])
    return DiscreteDistribution(2, p, max(0.0, 1.0 - math.fsum(p)))


def last_coalescence_gf(alpha: float, s: float) -> float:
    """sum_{j>=2} lim_n P~^n_{1j} s^j."""
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    if s == 0:
        return 0.0
    if alpha == 1:

        def f(x, xc):
            return np.log1p(-s * x) / _log1m(x, xc)

    else:
        c = 1.0 - alpha

        def f(x, xc):
            # [(1-sx)^{alpha-1} - 1] / [1 - (1-x)^{1-alpha}]
            return np.expm1(-c * np.log1p(-s * x)) / -np.expm1(c * _log1m(x, xc))

        if s == 1:

            def f(x, xc):
                # the ratio collapses to (1-x)^{alpha-1} at s = 1
                return _power(xc, x, alpha - 1)

    scale = s if alpha == 1 else alpha * s
    return scale * integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value


# -- hitting probabilities --------------------------------------------------


def hitting_prob_limit(alpha: float, j: int) -> float:
    """lim_n P(j in R^n) for the Beta(2 - alpha, alpha) coalescent."""
    if j < 2:
        raise ValueError("need j >= 2")
    if alpha == 1:

        def f(x, xc):
            return _power(x, xc, j - 1) / -_log1m(x, xc)

        return (j - 1) * integrate_01(f, tol=0, rel_tol=QUAD_TOL, complement=True).value
    g = _kernel(alpha)
    val = integrate_01(
        lambda x, xc: _power(x, xc, j - 1) * g(x, xc),
        tol=0,
        rel_tol=QUAD_TOL,
        complement=True,
    ).value
    pref = math.exp(log_gamma_ratio(alpha - 1, -1, base=j) - gammaln(alpha))
    return pref * val


def hitting_profile_limit(alpha: float, j_max: int) -> HittingProfile:
    return HittingProfile(
        "limit", np.array([hitting_prob_limit(alpha, j) for j in range(2, j_max + 1)])
    )


def hitting_profile_finite(m, n: int) -> HittingProfile:
    """P(j in R^n) for j = 2..n, as P~^n_{1j} / P_{j1} = Lambda_j D_j."""
    if n < 2:
        raise ValueError("need n >= 2")
    D = _depth_increments(m, n, n)
    lam = _totals(m, n)
    v = lam[2 : n + 1] * D[2:]
    v[-1] = 1.0  # the chain starts at n
    return HittingProfile(n, np.minimum(v, 1.0))


def hitting_prob_finite(m, n: int, j: int) -> float:
    if not 2 <= j <= n:
        raise ValueError("need 2 <= j <= n")
    if j == n:
        return 1.0
    return hitting_profile_finite(m, n)[j]


def reversed_transition(m, n: int, i: int, j: int) -> float:
    """P~^n_{ij}: transition i -> j of the time-reversed embedded chain.

    From P(i in R^n) P~^n_{ij} = P(j in R^n) P_{ji}.
    """
    if not 1 <= i < j <= n:
        raise ValueError("need 1 <= i < j <= n")
    m = as_measure(m)
    prof = hitting_profile_finite(m, n)
    table = RateTable(m, n)
    p_ji = table.block_row(j)[i - 1] / table.total(j)
    p_i = 1.0 if i == 1 else prof[i]
    return prof[j] * p_ji / p_i


def hitting_asymptote(alpha: float, j: int) -> float:
    """Large-j equivalent of lim_n P(j in R^n)."""
    if j < 2:
        raise ValueError("need j >= 2")
    if alpha > 1:
        return alpha - 1.0
    if alpha == 1:
        return 1.0 / math.log(j)
    return (1 - alpha) / math.gamma(alpha) * j ** (alpha - 1)
