"""Finite-n quantities against their n -> infinity limits.

Prints, for each alpha, the largest gap between the finite-n and limiting
last-coalescence laws (first ``jmax`` states), and the finite-n depth
against its limit where that limit is finite.

    python scripts/convergence_table.py --alphas 0.5 1 1.2 1.5 1.8
"""

import argparse
import math

import numpy as np

from coalesce import analytics as an


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.0, 1.2, 1.5, 1.8])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000, 10_000])
    ap.add_argument("--jmax", type=int, default=20)
    args = ap.parse_args()

    print(f"{'alpha':>6} {'n':>7} {'max |last gap|':>15} {'E depth(n)':>12} {'limit':>9} {'rel gap':>9}")
    for a in args.alphas:
        limit = np.array([an.last_coalescence_limit(a, j) for j in range(2, args.jmax + 1)])
        try:
            depth = an.expected_depth(a)
        except an.StaysInfiniteError:
            depth = math.inf
        for n in args.sizes:
            fin = an.last_coalescence_finite(a, n, jmax=min(n, args.jmax))
            p = np.zeros(limit.size)
            p[: fin.probabilities.size] = fin.probabilities
            gap = np.max(np.abs(p - limit))
            dn = an.expected_hitting_time(a, 1, n)
            rel = f"{(dn - depth) / depth:.2%}" if math.isfinite(depth) else "-"
            print(f"{a:>6g} {n:>7d} {gap:>15.3e} {dn:>12.5f} {depth:>9.4f} {rel:>9}")


if __name__ == "__main__":
    main()
