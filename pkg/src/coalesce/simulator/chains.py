"""Block counting chain and fixation line, simulated for many replicas at
once."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coalesce.simulator.config import SimConfig, run_batches
from coalesce.simulator.kernels import BlockJumps, FixationJumps

__all__ = [
    "BlockCountingResult",
    "FixationLineResult",
    "Trajectory",
    "sim_block_counting",
    "sim_fixation_line",
]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One jump path. ``holding_times[k]`` is the time spent in ``states[k]``."""

    states: np.ndarray
    holding_times: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.states)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("a trajectory has at least one state")
        steps = np.diff(s)
        if steps.size and not (np.all(steps < 0) or np.all(steps > 0)):
            raise ValueError("states must be strictly monotone")
        if self.holding_times is not None:
            h = np.asarray(self.holding_times)
            if h.shape != (s.size - 1,) or np.any(h <= 0):
                raise ValueError("need one positive holding time per jump")

    @property
    def range(self) -> frozenset:
        return frozenset(int(x) for x in self.states)

    @property
    def absorption_time(self) -> float:
        if self.holding_times is None:
            raise ValueError("embedded-chain trajectory has no clock")
        return float(np.sum(self.holding_times))

    @property
    def last_jump(self) -> tuple[int, int]:
        if self.states.size < 2:
            raise ValueError("no jump taken")
        return int(self.states[-2]), int(self.states[-1])


class _PathLog:
    def __init__(self, size, first):
        self.first = first
        self.size = size
        self.who, self.state, self.dt = [], [], []

    def add(self, idx, state, dt):
        self.who.append(idx)
        self.state.append(state)
        self.dt.append(dt)

    def build(self):
        if not self.who:
            return [Trajectory(np.array([self.first]), np.empty(0)) for _ in range(self.size)]
        who = np.concatenate(self.who)
        state = np.concatenate(self.state)
        dt = np.concatenate(self.dt) if self.dt[0] is not None else None
        order = np.argsort(who, kind="stable")
        who, state = who[order], state[order]
        if dt is not None:
            dt = dt[order]
        cuts = np.searchsorted(who, np.arange(self.size + 1))
        out = []
        for r in range(self.size):
            lo, hi = cuts[r], cuts[r + 1]
            states = np.concatenate([[self.first], state[lo:hi]])
            h = None if dt is None else dt[lo:hi]
            out.append(Trajectory(states, h))
        return out


@dataclass(frozen=True, eq=False)
class BlockCountingResult:
    """Aggregates of ``replicas`` runs started from n blocks.

    ``depth`` is tau_target^n, the time to reach at most ``target`` blocks
    (None without holding times). ``last_from`` is the state left by the
    final jump. ``visits[j]`` counts the runs whose path contains j.
    """

    n: int
    target: int
    depth: np.ndarray | None
    last_from: np.ndarray
    steps: np.ndarray
    visits: np.ndarray | None
    trajectories: list[Trajectory] | None

    @property
    def replicas(self) -> int:
        return self.last_from.size

    def hit_frequencies(self) -> np.ndarray:
        return self.visits / self.replicas


def _block_batch(jumps, n, target, holding, track, keep_paths, size, rng):
    depth = np.zeros(size) if holding else None
    last = np.full(size, n, dtype=np.int64)
    steps = np.zeros(size, dtype=np.int64)
    visits = np.zeros(n + 1, dtype=np.int64)
    visits[n] = size
    log = _PathLog(size, n) if keep_paths else None
    # state of the runs still above target, compacted as runs finish
    ids = np.arange(size) if n > target else np.empty(0, dtype=np.int64)
    b = np.full(ids.size, n, dtype=np.int64)
    clock = np.zeros(ids.size)
    count = np.zeros(ids.size, dtype=np.int64)
    while ids.size:
        dt = None
        if holding:
            dt = rng.exponential(size=ids.size) / jumps.rate(b)
            clock += dt
        d = jumps.sample(b, rng)
        count += 1
        if track:
            np.add.at(visits, d, 1)
        if log is not None:
            log.add(ids, d, dt)
        done = d <= target
        if done.any():
            fin = ids[done]
            last[fin] = b[done]
            steps[fin] = count[done]
            if holding:
                depth[fin] = clock[done]
            keep = ~done
            ids, d, clock, count = ids[keep], d[keep], clock[keep], count[keep]
        b = d
    return depth, last, steps, (visits if track else None), (log.build() if log else None)


def sim_block_counting(
    cfg: SimConfig,
    *,
    target: int = 1,
    holding: bool = True,
    visits: bool = True,
    paths: bool = False,
) -> BlockCountingResult:
    """Run the block counting chain from ``cfg.size`` blocks down to at most
    ``target`` blocks. ``visits=False`` skips the per-state visit counts."""
    n = cfg.size
    if n < 2 or not 1 <= target:
        raise ValueError("need n >= 2 and target >= 1")
    jumps = BlockJumps(cfg.measure, n)
    jumps.warm(range(2, n + 1))
    parts = run_batches(
        cfg, lambda size, rng: _block_batch(jumps, n, target, holding, visits, paths, size, rng)
    )
    return BlockCountingResult(
        n=n,
        target=target,
        depth=np.concatenate([p[0] for p in parts]) if holding else None,
        last_from=np.concatenate([p[1] for p in parts]),
        steps=np.concatenate([p[2] for p in parts]),
        visits=np.sum([p[3] for p in parts], axis=0) if visits else None,
        trajectories=[t for p in parts for t in p[4]] if paths else None,
    )


@dataclass(frozen=True, eq=False)
class FixationLineResult:
    """Aggregates of fixation-line runs from ``start`` until the level first
    reaches ``cap`` or more.

    ``hit_time`` is alpha_start^cap. ``visits[k]`` counts runs whose range
    contains level k, for k <= cap.
    """

    start: int
    cap: int
    hit_time: np.ndarray | None
    steps: np.ndarray
    visits: np.ndarray
    trajectories: list[Trajectory] | None

    @property
    def replicas(self) -> int:
        return self.steps.size

    def range_frequencies(self) -> np.ndarray:
        """Empirical P(k in range - start) for k = 0..cap - start."""
        return self.visits[self.start :] / self.replicas


def _fixation_batch(jumps, start, cap, holding, keep_paths, size, rng):
    level = np.full(size, start, dtype=np.int64)
    clock = np.zeros(size) if holding else None
    steps = np.zeros(size, dtype=np.int64)
    visits = np.zeros(cap + 2, dtype=np.int64)
    visits[start] = size
    log = _PathLog(size, start) if keep_paths else None
    idx = np.arange(size)
    while idx.size:
        i = level[idx]
        dt = None
        if holding:
            dt = rng.exponential(size=idx.size) / jumps.rate(i)
            clock[idx] += dt
        nxt = jumps.sample(i, rng)
        level[idx] = nxt
        steps[idx] += 1
        np.add.at(visits, nxt, 1)
        if log is not None:
            log.add(idx, nxt, dt)
        idx = idx[nxt < cap]
    return clock, steps, visits[: cap + 1], (log.build() if log else None)


def sim_fixation_line(
    cfg: SimConfig, *, holding: bool = True, paths: bool = False
) -> FixationLineResult:
    """Run the fixation line from ``cfg.start`` until it reaches ``cfg.size``.

    Trajectories report every level above the cap as ``cap + 1``.
    """
    start, cap = cfg.start, cfg.size
    jumps = FixationJumps(cfg.measure, cap, start)
    jumps.warm(range(start, cap))
    parts = run_batches(
        cfg, lambda size, rng: _fixation_batch(jumps, start, cap, holding, paths, size, rng)
    )
    return FixationLineResult(
        start=start,
        cap=cap,
        hit_time=np.concatenate([p[0] for p in parts]) if holding else None,
        steps=np.concatenate([p[1] for p in parts]),
        visits=np.sum([p[2] for p in parts], axis=0),
        trajectories=[t for p in parts for t in p[3]] if paths else None,
    )
