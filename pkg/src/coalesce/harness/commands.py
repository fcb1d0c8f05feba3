"""The three report-producing commands: exact tables, simulation summaries
and exact-vs-simulated comparisons."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields

import numpy as np
from scipy import stats

from coalesce import analytics as an
from coalesce import rates
from coalesce.rates import LambdaMeasure, as_measure
from coalesce.harness.report import (
    P_THRESHOLD,
    Report,
    Row,
    StatTest,
    mean_row,
    proportion_row,
)
from coalesce.simulator import (
    POPULATION_CAP,
    CouplingError,
    SimConfig,
    sim_block_counting,
    sim_bs_branching,
    sim_bs_depth,
    sim_fixation_line,
    sim_lookdown,
    sim_partition_coalescent,
)

__all__ = [
    "COMPARE_QUANTITIES",
    "EXACT_QUANTITIES",
    "MODELS",
    "Params",
    "UsageError",
    "run_compare",
    "run_exact",
    "run_simulate",
]

EULER_GAMMA = float(np.euler_gamma)


class UsageError(ValueError):
    """Bad quantity, model or parameter combination."""


@dataclass
class Params:
    measure: LambdaMeasure
    seed: int = 42
    replicas: int = 100_000
    threads: int = 1
    n: int | None = None
    levels: int | None = None
    jmax: int | None = None
    imax: int | None = None
    kmax: int | None = None
    i: int | None = None
    j: int | None = None
    start: int | None = None
    s: float | None = None
    t: float | None = None
    horizon: float | None = None
    method: str | None = None
    cap: int | None = None
    z_threshold: float = 4.0

    def __post_init__(self):
        self.measure = as_measure(self.measure)

    def describe(self, simulated: bool = True) -> dict:
        m = self.measure
        out = {"measure": {"alpha": m.alpha} if m.is_beta else {"generic": m.label}}
        skip = {"measure", "threads"} | (set() if simulated else {"seed", "replicas", "z_threshold"})
        for f in fields(self):
            if f.name not in skip:
                v = getattr(self, f.name)
                if v is not None:
                    out[f.name] = v
        return out

    def sim(self, size: int, **kw) -> SimConfig:
        return SimConfig(
            measure=self.measure,
            seed=self.seed,
            replicas=self.replicas,
            size=size,
            threads=self.threads,
            **kw,
        )


def _alpha(p: Params, what: str) -> float:
    if not p.measure.is_beta:
        raise UsageError(f"{what} needs a Beta measure (--alpha)")
    return p.measure.alpha


def _pick(value, default):
    return default if value is None else value


def _positive(name, value, least=1):
    if value < least:
        raise UsageError(f"--{name} must be >= {least}")
    return value


# -- exact ------------------------------------------------------------------


def _exact_rates(p):
    n = _positive("n", _pick(p.n, 5), 2)
    m = p.measure
    rows = [Row(f"block[{n},{i}]", rates.block_rate(m, n, i)) for i in range(1, n)]
    rows.append(Row(f"total[{n}]", rates.total_rate(m, n)))
    rows += [Row(f"fixation[{i},{n}]", rates.fixation_rate(m, i, n)) for i in range(1, n)]
    rows += [
        Row(f"fixation_tail[{i},{n}]", rates.fixation_tail_rate(m, i, n), reference=rates.block_tail_rate(m, n, i))
        for i in range(1, n)
    ]
    if m.is_beta:
        rows += [Row(f"eta[{k}]", rates.interarrival(m.alpha, k)) for k in range(1, n)]
    return rows


def _exact_renewal(p):
    kmax = _positive("kmax", _pick(p.kmax, 30), 0)
    occ = an.fixation_occupancy(p.measure, 1, kmax + 1)
    return [Row(k, float(occ[k + 1])) for k in range(kmax + 1)]


def _exact_records(p):
    imax = _positive("imax", _pick(p.imax, 10), 2)
    probs = an.record_probs(p.measure, imax)
    return [Row(i, float(v)) for i, v in zip(range(2, imax + 1), probs)]


def _exact_record_gf(p):
    a = _alpha(p, "record-gf")
    s = _pick(p.s, 0.5)
    if not 0 <= s <= 1:
        raise UsageError("--s must lie in [0, 1]")
    v = an.record_gf(a, s)
    return [Row(f"s={s!r}", v, note="stays infinite" if math.isinf(v) else "")]


def _depth_limit_row(p):
    if not p.measure.is_beta:
        return None
    try:
        return Row("limit", an.expected_depth(p.measure.alpha))
    except an.StaysInfiniteError:
        return Row("limit", math.inf, note="stays infinite")


def _exact_depth(p):
    rows = []
    limit = _depth_limit_row(p)
    if limit is not None:
        rows.append(limit)
    if p.n is not None:
        n = _positive("n", p.n, 2)
        rows.append(Row(n, an.expected_hitting_time(p.measure, 1, n)))
    if not rows:
        raise UsageError("depth of a generic measure needs --n")
    return rows


def _exact_last_coalescence(p):
    n = _positive("n", _pick(p.n, 50), 2)
    d = an.last_coalescence_finite(p.measure, n, p.jmax)
    rows = [Row(int(j), float(v)) for j, v in zip(d.support, d.probabilities)]
    if d.truncation_mass:
        rows.append(Row("truncation", d.truncation_mass))
    return rows


def _exact_last_coalescence_limit(p):
    a = _alpha(p, "last-coalescence-limit")
    jmax = _positive("jmax", _pick(p.jmax, 20), 2)
    d = an.last_coalescence_limit_dist(a, jmax)
    rows = [Row(int(j), float(v)) for j, v in zip(d.support, d.probabilities)]
    rows.append(Row("truncation", d.truncation_mass))
    return rows


def _exact_hitting(p):
    n = _positive("n", _pick(p.n, 50), 2)
    prof = an.hitting_profile_finite(p.measure, n)
    ref = p.measure.alpha if p.measure.is_beta else None
    top = min(n, _pick(p.jmax, n))
    return [
        Row(j, prof[j], reference=None if ref is None else an.hitting_asymptote(ref, j))
        for j in range(2, top + 1)
    ]


def _exact_hitting_limit(p):
    a = _alpha(p, "hitting-limit")
    jmax = _positive("jmax", _pick(p.jmax, 20), 2)
    return [
        Row(j, an.hitting_prob_limit(a, j), reference=an.hitting_asymptote(a, j))
        for j in range(2, jmax + 1)
    ]


def _exact_hitting_asymptote(p):
    a = _alpha(p, "hitting-asymptote")
    js = [p.j] if p.j is not None else [10, 100, 1000, 10_000]
    return [
        Row(j, an.hitting_asymptote(a, _positive("j", j, 2)), reference=an.hitting_prob_limit(a, j))
        for j in js
    ]


def _exact_reversed(p):
    n = _positive("n", _pick(p.n, 50), 2)
    i = _pick(p.i, 1)
    if not 1 <= i < n:
        raise UsageError("need 1 <= --i < --n")
    return [Row(j, an.reversed_transition(p.measure, n, i, j)) for j in range(i + 1, n + 1)]


EXACT_QUANTITIES = {
    "rates": _exact_rates,
    "renewal": _exact_renewal,
    "records": _exact_records,
    "record-gf": _exact_record_gf,
    "depth": _exact_depth,
    "last-coalescence": _exact_last_coalescence,
    "last-coalescence-limit": _exact_last_coalescence_limit,
    "hitting": _exact_hitting,
    "hitting-limit": _exact_hitting_limit,
    "hitting-asymptote": _exact_hitting_asymptote,
    "reversed": _exact_reversed,
}


def _timed(command, name, p, body) -> Report:
    t0 = time.perf_counter()
    rows, tests, extra = body()
    config = {**p.describe(simulated=command != "exact"), **extra}
    report = Report(command, name, config, rows, tests)
    report.finalize()
    report.runtime_ms = round((time.perf_counter() - t0) * 1e3, 3)
    return report


def run_exact(quantity: str, p: Params) -> Report:
    fn = EXACT_QUANTITIES.get(quantity)
    if fn is None:
        raise UsageError(f"unknown quantity {quantity!r}")
    return _timed("exact", quantity, p, lambda: (fn(p), [], {}))


# -- simulate ---------------------------------------------------------------


def _freq_row(index, hits, replicas, note=""):
    f = hits / replicas
    se = max(math.sqrt(f * (1 - f) / replicas), 0.5 / replicas)
    return Row(index, empirical=float(f), std_error=se, note=note)


def _sim_block_counting(p, sink):
    n = _positive("n", _pick(p.n, 50), 2)
    cfg = p.sim(n)
    res = sim_block_counting(cfg)
    rows = [mean_row("depth", None, res.depth), mean_row("steps", None, res.steps)]
    rows += [_freq_row(f"visit[{j}]", res.visits[j], res.replicas) for j in range(1, n + 1)]
    rows += [
        _freq_row(f"last_from[{j}]", int(c), res.replicas)
        for j, c in enumerate(np.bincount(res.last_from, minlength=n + 1))
        if j >= 2 and c
    ]
    if sink is not None:
        sink(["depth", "last_from", "steps"], zip(res.depth, res.last_from, res.steps))
    return rows, [], {"sim": cfg.describe()}


def _sim_partition(p, sink):
    N = _positive("levels", _pick(p.levels, 10), 2)
    cfg = p.sim(N)
    res = sim_partition_coalescent(cfg)
    hits = res.records.sum(axis=0)
    rows = [_freq_row(f"record[{i}]", int(hits[i]), res.replicas) for i in range(2, N + 1)]
    rows.append(mean_row(f"depth[{N}]", None, res.depths[:, N]))
    if sink is not None:
        sink([f"depth[{n}]" for n in range(1, N + 1)], res.depths[:, 1:])
    return rows, [], {"sim": cfg.describe()}


def _fixation_cfg(p, default_cap):
    start = _positive("start", _pick(p.start, 1), 1)
    cap = _pick(p.levels, default_cap)
    if cap <= start:
        raise UsageError("--levels must exceed --start")
    return p.sim(cap, start=start)


def _sim_fixation_line(p, sink):
    cfg = _fixation_cfg(p, 31)
    res = sim_fixation_line(cfg)
    rows = [mean_row("hit_time", None, res.hit_time)]
    rows += [
        _freq_row(f"range[{k}]", int(res.visits[cfg.start + k]), res.replicas)
        for k in range(cfg.size - cfg.start + 1)
    ]
    if sink is not None:
        sink(["hit_time", "steps"], zip(res.hit_time, res.steps))
    return rows, [], {"sim": cfg.describe()}


def _sim_lookdown(p, sink):
    N = _positive("levels", _pick(p.levels, 10), 2)
    cfg = p.sim(N, horizon=_pick(p.horizon, 10.0))
    try:
        runs = sim_lookdown(cfg)
        coupling = StatTest("coupling", float(len(runs)), None, True)
    except CouplingError as e:
        return [Row("coupling", note=str(e), passed=False)], [], {"sim": cfg.describe()}
    rows = []
    for n in range(2, N + 1):
        hits = np.array([r.fixation_hit_time(1, n) for r in runs])
        done = np.isfinite(hits)
        missing = int((~done).sum())
        row = mean_row(f"alpha[1,{n}]", None, hits[done]) if done.any() else Row(f"alpha[1,{n}]")
        if missing:
            row.passed = False
            row.note = f"{missing} runs ended before level {n} was reached"
        rows.append(row)
    if sink is not None:
        sink(["events", "time_to_fixation"], ((len(r.events), r.times[-1]) for r in runs))
    return rows, [coupling], {"sim": cfg.describe()}


def _sim_bs_branching(p, sink):
    _alpha(p, "bs-branching")
    t = _pick(p.t, 3.0)
    method = _pick(p.method, "exact")
    cfg = p.sim(1)
    try:
        res = sim_bs_branching(t, cfg, method=method, cap=_pick(p.cap, POPULATION_CAP))
    except ValueError as e:
        raise UsageError(str(e)) from None
    stat = res.statistic
    rows = [
        mean_row("statistic", 1.0 if t > 0 else 0.0, stat, note="Exp(1) mean is the large-t limit"),
        proportion_row(
            "size==1",
            math.exp(-t),
            int(np.sum(res.log_size == 0)),
            res.replicas,
            threshold=p.z_threshold,
            note="no jump yet: exact at every t",
        ),
    ]
    rows[0].passed = rows[0].z_score = None  # a limit law, not an exact value
    trunc = int(res.truncated.sum())
    if trunc:
        rows.append(
            proportion_row("truncated", 0.0, trunc, res.replicas, threshold=p.z_threshold, note="population cap reached")
        )
    tests = []
    if t > 0:
        ks = stats.kstest(stat, "expon")
        tests.append(StatTest("ks_exp1", float(ks.statistic), float(ks.pvalue), None))
    if sink is not None:
        sink(["log_size", "truncated"], zip(res.log_size, res.truncated))
    return rows, tests, {"sim": cfg.describe(), "t": t}


def _sim_bs_depth(p, sink):
    _alpha(p, "bs-depth")
    n = _positive("n", _pick(p.n, 1000), 3)
    cfg = p.sim(n)
    try:
        x = sim_bs_depth(n, cfg)
    except ValueError as e:
        raise UsageError(str(e)) from None
    row = mean_row("centered_depth", EULER_GAMMA, x, note="Gumbel mean is the large-n limit")
    row.passed = row.z_score = None
    ks = stats.kstest(x, "gumbel_r")
    if sink is not None:
        sink(["centered_depth"], ((v,) for v in x))
    return [row], [StatTest("ks_gumbel", float(ks.statistic), float(ks.pvalue), None)], {
        "sim": cfg.describe()
    }


MODELS = {
    "block-counting": _sim_block_counting,
    "partition": _sim_partition,
    "fixation-line": _sim_fixation_line,
    "lookdown": _sim_lookdown,
    "bs-branching": _sim_bs_branching,
    "bs-depth": _sim_bs_depth,
}


def run_simulate(model: str, p: Params, sink=None) -> Report:
    """``sink(header, rows)`` receives the per-replica stream if given."""
    fn = MODELS.get(model)
    if fn is None:
        raise UsageError(f"unknown model {model!r}")
    return _timed("simulate", model, p, lambda: fn(p, sink))


# -- compare ----------------------------------------------------------------


def _chi_square(observed, expected, name="chi2") -> StatTest:
    """Goodness of fit with cells pooled from the right until each expects
    at least 5 counts."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp:
            obs[-1] += o_acc
            exp[-1] += e_acc
        else:
            obs.append(o_acc)
            exp.append(e_acc)
    if len(exp) < 2:
        return StatTest(name, 0.0, 1.0, True)
    obs, exp = np.array(obs), np.array(exp)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    pval = float(stats.chi2.sf(stat, len(exp) - 1))
    return StatTest(name, stat, pval, pval >= P_THRESHOLD)


def _cmp_records(p):
    N = _positive("levels", _pick(p.levels, 10), 2)
    cfg = p.sim(N)
    res = sim_partition_coalescent(cfg)
    exact = an.record_probs(p.measure, N)
    hits = res.records.sum(axis=0)
    rows = [
        proportion_row(i, float(exact[i - 2]), int(hits[i]), res.replicas, threshold=p.z_threshold)
        for i in range(2, N + 1)
    ]
    return rows, [], {"sim": cfg.describe()}


def _cmp_last_coalescence(p):
    n = _positive("n", _pick(p.n, 50), 2)
    cfg = p.sim(n)
    res = sim_block_counting(cfg, holding=False)
    exact = an.last_coalescence_finite(p.measure, n).probabilities
    counts = np.bincount(res.last_from, minlength=n + 1)[2:]
    rows = [
        proportion_row(j, float(e), int(c), res.replicas, threshold=p.z_threshold)
        for j, e, c in zip(range(2, n + 1), exact, counts)
    ]
    return rows, [_chi_square(counts, exact * res.replicas)], {"sim": cfg.describe()}


def _j_grid(top: int, dense: int = 50, sparse: int = 50) -> list[int]:
    """Every j up to ``dense``, then log-spaced, so a report stays near 10^2 rows."""
    js = np.arange(2, min(top, dense) + 1)
    if top > dense:
        js = np.union1d(js, np.unique(np.geomspace(dense + 1, top, sparse).round().astype(int)))
    return [int(j) for j in js]


def _cmp_hitting(p):
    n = _positive("n", _pick(p.n, 50), 2)
    cfg = p.sim(n)
    res = sim_block_counting(cfg, holding=False)
    prof = an.hitting_profile_finite(p.measure, n)
    top = min(n - 1, _pick(p.jmax, n - 1))
    rows = []
    for j in _j_grid(top):
        row = proportion_row(j, prof[j], int(res.visits[j]), res.replicas, threshold=p.z_threshold)
        if p.measure.is_beta:
            row.reference = an.hitting_asymptote(p.measure.alpha, j)
        rows.append(row)
    return rows, [], {"sim": cfg.describe()}


def _cmp_renewal(p):
    kmax = _positive("kmax", _pick(p.kmax, 30), 1)
    cfg = p.sim(kmax + 1, start=1)
    res = sim_fixation_line(cfg, holding=False)
    occ = an.fixation_occupancy(p.measure, 1, kmax + 1)
    rows = [
        proportion_row(k, float(occ[k + 1]), int(res.visits[k + 1]), res.replicas, threshold=p.z_threshold)
        for k in range(1, kmax + 1)
    ]
    return rows, [], {"sim": cfg.describe()}


def _cmp_depth(p):
    n = _positive("n", _pick(p.n, 100), 2)
    cfg = p.sim(n)
    res = sim_block_counting(cfg)
    rows = [mean_row(n, an.expected_hitting_time(p.measure, 1, n), res.depth, threshold=p.z_threshold)]
    limit = _depth_limit_row(p)
    if limit is not None:
        rows[0].reference = limit.exact
        rows.append(limit)
    return rows, [], {"sim": cfg.describe()}


def _cmp_tau_alpha(p):
    j = _positive("j", _pick(p.j, 1), 1)
    n = _pick(p.n, 3)
    if n <= j:
        raise UsageError("need --n > --j")
    tau_cfg = p.sim(n)
    alpha_cfg = p.sim(n, start=j, stream=1)
    tau = sim_block_counting(tau_cfg, target=j).depth
    alpha = sim_fixation_line(alpha_cfg).hit_time
    exact = an.expected_hitting_time(p.measure, j, n)
    rows = [
        mean_row(f"tau[{j},{n}]", exact, tau, threshold=p.z_threshold),
        mean_row(f"alpha[{j},{n}]", exact, alpha, threshold=p.z_threshold),
    ]
    ks = stats.ks_2samp(tau, alpha)
    test = StatTest("ks_two_sample", float(ks.statistic), float(ks.pvalue), bool(ks.pvalue >= P_THRESHOLD))
    return rows, [test], {"sim": tau_cfg.describe(), "sim_alpha": alpha_cfg.describe()}


COMPARE_QUANTITIES = {
    "records": _cmp_records,
    "last-coalescence": _cmp_last_coalescence,
    "hitting": _cmp_hitting,
    "renewal": _cmp_renewal,
    "depth": _cmp_depth,
    "tau-vs-alpha": _cmp_tau_alpha,
}


def run_compare(quantity: str, p: Params) -> Report:
    fn = COMPARE_QUANTITIES.get(quantity)
    if fn is None:
        raise UsageError(f"unknown quantity {quantity!r}")
    return _timed("compare", quantity, p, lambda: fn(p))
