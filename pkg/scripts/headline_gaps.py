"""Where three headline checks sit, exactly and by simulation.

1. Monte Carlo depth at N = 10^4 against the N -> infinity expectation: the
   exact finite-N mean shows how much of any gap is bias and how much noise.
2. The hitting probability at alpha = 3/2 against its asymptote alpha - 1:
   the ratio at j = 10^4 and the first j where it drops inside 1 +- 1%.
3. The Bolthausen-Sznitman growth statistic e^{-t} log L_1(t) at t = 3:
   the exact Kolmogorov distance of its law to Exp(1), then a seed sweep.

    python scripts/headline_gaps.py --seeds 1 2 3 4 5
"""

import argparse
import math

import numpy as np
from scipy import stats
from scipy.special import gammaln

from coalesce import analytics as an
from coalesce.numerics import log_gamma_ratio
from coalesce.simulator import SimConfig, sim_block_counting, sim_bs_branching


def branching_ks_distance(t: float) -> float:
    """sup_x |P(e^{-t} log L <= x) - (1 - e^{-x})| from the exact law of L."""
    a = math.exp(-t)

    def log_tail(k):  # log P(L > k)
        return log_gamma_ratio(1 - a, 1, base=np.asarray(k, dtype=float)) - gammaln(1 - a)

    # every atom up to 10^6, then a fine geometric grid where atoms are negligible
    ks = np.concatenate([np.arange(1, 10**6 + 1), np.exp(np.linspace(math.log(1e6), 700, 200_000))[1:]])
    F = -np.expm1(log_tail(ks))
    x = a * np.log(ks)
    x_next = np.append(x[1:], np.inf)
    G = -np.expm1(-x)
    G_next = -np.expm1(-x_next)
    return float(max(np.max(np.abs(F - G)), np.max(np.abs(F - G_next))))


def first_j_within(alpha: float, tol: float) -> int:
    lo, hi = 2, 2
    while hitting_ratio(alpha, hi) > 1 + tol:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (mid, hi) if hitting_ratio(alpha, mid) > 1 + tol else (lo, mid)
    return hi


def hitting_ratio(alpha, j):
    return an.hitting_prob_limit(alpha, j) / (alpha - 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=[42, 1, 2, 3, 4])
    ap.add_argument("--replicas", type=int, default=10_000)
    ap.add_argument("--size", type=int, default=10_000, help="population for the depth runs")
    args = ap.parse_args()

    print("depth: simulated mean vs finite-N and limiting expectations")
    for alpha in (1.2, 1.5, 1.8):
        limit = an.expected_depth(alpha)
        finite = an.expected_hitting_time(alpha, 1, args.size)
        print(f"  alpha={alpha}: limit {limit:.4f}, exact at N={args.size} {finite:.4f} ({finite / limit - 1:+.2%})")
        for seed in args.seeds:
            d = sim_block_counting(
                SimConfig(measure=alpha, seed=seed, replicas=args.replicas, size=args.size), visits=False
            ).depth
            se = d.std(ddof=1) / math.sqrt(d.size)
            print(
                f"    seed {seed:>3}: mean {d.mean():.4f}  vs limit {d.mean() / limit - 1:+.2%}"
                f"  z vs finite-N {(d.mean() - finite) / se:+.2f}"
            )

    print("\nhitting probability at alpha = 1.5 over its asymptote 0.5")
    for j in (10**2, 10**3, 10**4):
        print(f"  j={j}: ratio {hitting_ratio(1.5, j):.5f}")
    print(f"  first j with ratio <= 1.01: {first_j_within(1.5, 0.01)}")

    t = 3.0
    print(f"\ngrowth statistic at t={t}: exact KS distance to Exp(1) = {branching_ks_distance(t):.4f}")
    print(f"  (the atom P(L=1) = e^-t = {math.exp(-t):.4f} sits at statistic 0)")
    for seed in args.seeds:
        res = sim_bs_branching(t, SimConfig(measure=1.0, seed=seed, replicas=args.replicas))
        print(f"    seed {seed:>3}: KS {stats.kstest(res.statistic, 'expon').statistic:.4f}")


if __name__ == "__main__":
    main()
