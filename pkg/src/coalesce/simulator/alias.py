"""Walker/Vose alias tables for O(1) sampling from a finite distribution."""

from __future__ import annotations

import numpy as np

__all__ = ["AliasTable"]


class AliasTable:
    """Sample indices 0..K-1 with probability proportional to ``weights``."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be a non-empty non-negative vector")
        k = w.size
        scaled = w * (k / w.sum())
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias
        self.prob.setflags(write=False)
        self.alias.setflags(write=False)

    def __len__(self):
        return self.prob.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        col = rng.integers(0, self.prob.size, size=size)
        keep = rng.random(size) < self.prob[col]
        return np.where(keep, col, self.alias[col])
