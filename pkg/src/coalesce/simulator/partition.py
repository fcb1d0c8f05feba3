"""The N-coalescent on labelled blocks, which couples tau_1^n for every
n <= N on one path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coalesce.simulator.config import SimConfig, run_batches
from coalesce.simulator.kernels import BlockJumps

__all__ = ["PartitionResult", "sim_partition_coalescent"]


@dataclass(frozen=True, eq=False)
class PartitionResult:
    """``depths[r, n]`` is tau_1^n on run r (column 0 unused, column 1 zero);
    ``records[r, n]`` marks n as a record, i.e. tau_1^n > tau_1^{n-1}."""

    N: int
    depths: np.ndarray
    records: np.ndarray

    @property
    def replicas(self) -> int:
        return self.depths.shape[0]

    def record_frequencies(self) -> np.ndarray:
        """Empirical P(i is a record) for i = 0..N (entries 0 and 1 are 0)."""
        return self.records.mean(axis=0)


def _partition_batch(jumps, N, size, rng):
    elems = np.arange(N)
    cols = np.arange(N + 1)
    # each element carries the smallest element of its block
    label = np.tile(elems, (size, 1))
    blocks = np.full(size, N, dtype=np.int64)
    clock = np.zeros(size)
    depths = np.zeros((size, N + 1))
    depths[:, 0] = np.nan
    merged = np.ones(size, dtype=np.int64)  # 1..merged already share a block
    idx = np.arange(size)
    while idx.size:
        b = blocks[idx]
        clock[idx] += rng.exponential(size=idx.size) / jumps.rate(b)
        dest = jumps.sample(b, rng)
        k = b - dest + 1
        lab = label[idx]
        keys = rng.random((idx.size, N))
        keys[lab != elems] = 2.0  # only block representatives can be picked
        cut = np.take_along_axis(np.sort(keys, axis=1), (k - 1)[:, None], axis=1)
        chosen = keys <= cut
        new = np.where(chosen, elems, N).min(axis=1)
        lab = np.where(np.take_along_axis(chosen, lab, axis=1), new[:, None], lab)
        label[idx] = lab
        blocks[idx] = dest

        lead = np.cumprod(lab == 0, axis=1).sum(axis=1)
        fresh = (cols > merged[idx, None]) & (cols <= lead[:, None])
        sub = depths[idx]
        sub[fresh] = np.broadcast_to(clock[idx, None], sub.shape)[fresh]
        depths[idx] = sub
        merged[idx] = lead
        idx = idx[dest > 1]
    return depths


def sim_partition_coalescent(cfg: SimConfig) -> PartitionResult:
    """Simulate the ``cfg.size``-coalescent and read off depths and records."""
    N = cfg.size
    if N < 2:
        raise ValueError("N must be >= 2")
    jumps = BlockJumps(cfg.measure, N)
    jumps.warm(range(2, N + 1))
    depths = np.concatenate(
        run_batches(cfg, lambda size, rng: _partition_batch(jumps, N, size, rng))
    )
    records = np.zeros(depths.shape, dtype=bool)
    records[:, 2:] = depths[:, 2:] > depths[:, 1:-1]
    return PartitionResult(N, depths, records)
