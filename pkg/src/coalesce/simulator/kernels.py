"""Jump samplers for the block counting process and the fixation line.

Both work on whole arrays of current states at once. For the Beta family
the block counting destination is found by searching the closed-form
cumulative law

    P(next <= i | b blocks) = Lambda_{i+1} P(eta >= b - i) / Lambda_b,

which needs no per-state tables and so scales to millions of blocks.
Generic measures fall back to per-state alias tables over RateTable rows.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from coalesce.numerics import log_gamma_ratio
from coalesce.rates import RateTable, as_measure, fixation_tail_rate
from coalesce.simulator.alias import AliasTable

__all__ = ["BlockJumps", "FixationJumps"]


def _uniform_open_closed(rng, size):
    # U in (0, 1]
    return 1.0 - rng.random(size)


class BlockJumps:
    """Embedded-chain destinations and holding rates for up to ``cap`` blocks."""

    def __init__(self, measure, cap: int):
        self.measure = as_measure(measure)
        self.cap = int(cap)
        if self.cap < 2:
            raise ValueError("cap must be >= 2")
        if self.measure.is_beta:
            a = self.measure.alpha
            i = np.arange(self.cap + 1, dtype=float)
            rising = np.full(i.size, -np.inf)
            rising[1:] = log_gamma_ratio(a, 0, base=i[1:])
            self._rising = rising  # log Gamma(i + a) / Gamma(i)
            self._tail = np.full(i.size, np.inf)  # log P(eta >= m) up to a constant; m >= 1
            self._tail[1:] = log_gamma_ratio(1 - a, 1, base=i[1:])
            self._shift = gammaln(2 - a)
            self._log_rate = rising - gammaln(a + 1)  # index b - 1 gives log Lambda_b
        else:
            self._table = RateTable(self.measure, self.cap)
            self._rates = self._table.totals(self.cap).copy()
            self._alias: dict[int, AliasTable] = {}

    def rate(self, b: np.ndarray) -> np.ndarray:
        """Lambda_b."""
        if self.measure.is_beta:
            return np.exp(self._log_rate[b - 1])
        return self._rates[b]

    def warm(self, states) -> None:
        """Build alias tables up front so sampling never mutates shared state."""
        if not self.measure.is_beta:
            for b in states:
                self._row(int(b))

    def _row(self, b: int) -> AliasTable:
        t = self._alias.get(b)
        if t is None:
            t = AliasTable(self._table.block_row(b))
            self._alias[b] = t
        return t

    def sample(self, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One destination per entry of ``b`` (all entries >= 2)."""
        b = np.asarray(b, dtype=np.int64)
        if self.measure.alpha == 1.0:
            return self._invert_bs(b, rng)
        if self.measure.is_beta:
            return self._search(b, rng)
        out = np.empty_like(b)
        for s in np.unique(b):
            sel = np.flatnonzero(b == s)
            out[sel] = self._row(int(s)).sample(rng, sel.size) + 1
        return out

    @staticmethod
    def _invert_bs(b, rng):
        # alpha = 1: P(next <= i) = i / ((b - i)(b - 1)), inverted in closed form
        u = _uniform_open_closed(rng, b.size)
        bf = b.astype(float)
        i = np.ceil(u * bf * (bf - 1) / (1 + u * (bf - 1))).astype(np.int64)
        i = np.clip(i, 1, b - 1)
        # one-step guards against rounding at the cell edges
        low = (i > 1) & ((i - 1) / ((bf - i + 1) * (bf - 1)) >= u)
        i[low] -= 1
        high = (i < b - 1) & (i / ((bf - i) * (bf - 1)) < u)
        i[high] += 1
        return i

    def _log_cdf_gap(self, b, m, base, logu):
        # log P(next <= b - m) - log U
        return self._rising[b - m] + self._tail[m] - base - logu

    def _search(self, b, rng):
        logu = np.log(_uniform_open_closed(rng, b.size))
        base = self._rising[b - 1] + self._shift
        # jump size m = b - next; the largest m whose cumulative value reaches U
        lo = np.ones_like(b)
        hi = b.copy()
        idx = np.flatnonzero(b > 2)
        while idx.size:
            cand = 2 * lo[idx]
            inside = cand <= b[idx] - 1
            hi[idx[~inside]] = b[idx[~inside]]
            sub, cs = idx[inside], cand[inside]
            ok = self._log_cdf_gap(b[sub], cs, base[sub], logu[sub]) >= 0
            lo[sub[ok]] = cs[ok]
            hi[sub[~ok]] = cs[~ok]
            idx = sub[ok]
        idx = np.flatnonzero(hi - lo > 1)
        while idx.size:
            mid = (lo[idx] + hi[idx]) // 2
            ok = self._log_cdf_gap(b[idx], mid, base[idx], logu[idx]) >= 0
            lo[idx[ok]] = mid[ok]
            hi[idx[~ok]] = mid[~ok]
            idx = idx[hi[idx] - lo[idx] > 1]
        return b - lo


class FixationJumps:
    """Next level of the fixation line, with every level above ``cap``
    lumped into ``cap + 1``."""

    def __init__(self, measure, cap: int, start: int = 1):
        self.measure = as_measure(measure)
        self.cap = int(cap)
        self.start = int(start)
        if not 1 <= self.start < self.cap:
            raise ValueError("need 1 <= start < cap")
        self._table = RateTable(self.measure, self.cap + 1)
        self._rates = self._table.totals(self.cap + 1).copy()
        if self.measure.is_beta:
            a = self.measure.alpha
            span = self.cap - self.start
            m = np.arange(1, span + 1)
            eta = np.exp(np.log(a) - gammaln(2 - a) + log_gamma_ratio(1 - a, 2, base=m))
            over = np.exp(log_gamma_ratio(2 - a, 2, base=span) - gammaln(2 - a))
            self._eta = AliasTable(np.append(eta, over))
        else:
            self._alias: dict[int, AliasTable] = {}

    def rate(self, i: np.ndarray) -> np.ndarray:
        """Holding rate Lambda_{i+1} at level i."""
        return self._rates[i + 1]

    def warm(self, levels) -> None:
        if not self.measure.is_beta:
            for i in levels:
                self._row(int(i))

    def _row(self, i: int) -> AliasTable:
        t = self._alias.get(i)
        if t is None:
            row = self._table.fixation_row(i, self.cap)
            over = fixation_tail_rate(self.measure, i, self.cap + 1)
            t = AliasTable(np.append(row, over))
            self._alias[i] = t
        return t

    def sample(self, i: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        i = np.asarray(i, dtype=np.int64)
        if self.measure.is_beta:
            nxt = i + 1 + self._eta.sample(rng, i.size)
        else:
            nxt = np.empty_like(i)
            for s in np.unique(i):
                sel = np.flatnonzero(i == s)
                nxt[sel] = s + 1 + self._row(int(s)).sample(rng, sel.size)
        return np.minimum(nxt, self.cap + 1)
