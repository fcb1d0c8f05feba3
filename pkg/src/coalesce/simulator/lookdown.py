"""The lookdown model restricted to its lowest N levels, with the fixation
lines and block counts both read off the same ancestor array."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coalesce.simulator.config import SimConfig, run_batches
from coalesce.simulator.kernels import BlockJumps

__all__ = ["CouplingError", "LookdownRun", "LookdownState", "sim_lookdown"]


class CouplingError(AssertionError):
    """{tau_j^n > t} and {alpha_j^n > t} disagreed on a lookdown path."""


@dataclass
class LookdownState:
    """``ancestors[i - 1]`` is the time-0 level of the individual now at level i."""

    N: int
    ancestors: np.ndarray = None
    clock: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.ancestors is None:
            self.ancestors = np.arange(1, self.N + 1)

    def reproduce(self, levels: np.ndarray) -> None:
        """The individual at min(levels) puts offspring on all ``levels``;
        everyone else keeps their order and moves up to fill the gaps."""
        mark = np.zeros(self.N + 1, dtype=bool)
        mark[levels] = True
        taken = np.cumsum(mark)[1:]
        lvl = np.arange(1, self.N + 1)
        parent = np.where(mark[1:], levels.min(), lvl - np.maximum(taken - 1, 0))
        self.ancestors = self.ancestors[parent - 1]
        self.check_order()

    def _first_above(self) -> np.ndarray:
        # f[j] = lowest level whose ancestor exceeds j, or N + 1 if none
        running_max = np.maximum.accumulate(self.ancestors)
        return np.searchsorted(running_max, np.arange(self.N + 1), side="right") + 1

    def check_order(self) -> None:
        """Level 1 never changes lineage, and the lowest level outside the
        offspring of 1..j always descends from j + 1."""
        a = self.ancestors
        if a[0] != 1:
            raise AssertionError("level 1 lost its lineage")
        first = self._first_above()[1 : self.N]
        has = first <= self.N
        j = np.arange(1, self.N)
        if np.any(a[first[has] - 1] != j[has] + 1):
            raise AssertionError("offspring of 1..j are not led by j + 1")

    def fixation_levels(self) -> np.ndarray:
        """L_j for j = 0..N-1, capped at N: the block {1..L_j} of levels
        descending from time-0 levels 1..j."""
        return self._first_above()[: self.N] - 1

    def block_counts(self) -> np.ndarray:
        """X^n for n = 0..N: distinct time-0 ancestors among levels 1..n."""
        _, first = np.unique(self.ancestors, return_index=True)
        fresh = np.zeros(self.N, dtype=np.int64)
        fresh[first] = 1
        return np.concatenate([[0], np.cumsum(fresh)])

    def check_coupling(self) -> None:
        """For all 1 <= j < n <= N: X^n > j exactly when L_j < n."""
        N = self.N
        j = np.arange(1, N)[:, None]
        n = np.arange(2, N + 1)[None, :]
        upper = j < n
        blocks = self.block_counts()[n] > j
        lines = self.fixation_levels()[1:, None] < n
        if np.any((blocks != lines) & upper):
            raise CouplingError(f"coupling broken at t={self.clock!r}")


@dataclass(frozen=True, eq=False)
class LookdownRun:
    """One run up to ``horizon``.

    ``fixation[:, j]`` holds L_j just after each event (row 0 is time 0),
    ``blocks[:, n]`` the matching X^n.
    """

    N: int
    horizon: float
    times: np.ndarray
    events: list = field(repr=False)
    fixation: np.ndarray = field(repr=False)
    blocks: np.ndarray = field(repr=False)

    def fixation_hit_time(self, j: int, n: int) -> float:
        """alpha_j^n, or inf if L_j stays below n up to the horizon."""
        hit = np.flatnonzero(self.fixation[:, j] >= n)
        return float(self.times[hit[0]]) if hit.size else math.inf

    def depth(self, j: int, n: int) -> float:
        """tau_j^n, or inf if still more than j ancestors at the horizon."""
        hit = np.flatnonzero(self.blocks[:, n] <= j)
        return float(self.times[hit[0]]) if hit.size else math.inf


def _lookdown_run(jumps, N, horizon, rng):
    state = LookdownState(N)
    rate = float(jumps.rate(np.array([N]))[0])
    times, events = [0.0], []
    fix, blk = [state.fixation_levels()], [state.block_counts()]
    state.check_coupling()
    while True:
        state.clock += rng.exponential() / rate
        if state.clock > horizon:
            break
        k = N - int(jumps.sample(np.array([N]), rng)[0]) + 1
        levels = np.sort(rng.choice(N, size=k, replace=False)) + 1
        state.reproduce(levels)
        state.check_coupling()
        times.append(state.clock)
        events.append((state.clock, tuple(int(x) for x in levels)))
        fix.append(state.fixation_levels())
        blk.append(state.block_counts())
        if np.all(state.ancestors == 1):
            break  # everyone descends from level 1; nothing else can change
    return LookdownRun(N, horizon, np.array(times), events, np.array(fix), np.array(blk))


def sim_lookdown(cfg: SimConfig) -> list[LookdownRun]:
    """``cfg.replicas`` independent runs on ``cfg.size`` levels up to
    ``cfg.horizon``. Every event is checked against the tau/alpha coupling."""
    N = cfg.size
    horizon = cfg.horizon
    if N < 2 or horizon is None or not horizon > 0:
        raise ValueError("need N >= 2 and a positive horizon")
    jumps = BlockJumps(cfg.measure, N)
    jumps.warm([N])

    def batch(size, rng):
        return [_lookdown_run(jumps, N, horizon, rng) for _ in range(size)]

    return [run for part in run_batches(cfg, batch) for run in part]
