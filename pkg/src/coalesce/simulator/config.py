"""Simulation configuration and the batch/stream layout that makes runs
reproducible."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, TypeVar

import numpy as np

from coalesce.rates import LambdaMeasure, as_measure

__all__ = ["SimConfig", "run_batches"]

DEFAULT_SEED = 42
DEFAULT_BATCH = 16_384

T = TypeVar("T")


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a simulation's output.

    ``size`` is the sample size n, the population N or the level cap,
    depending on the engine. Replicas are split into consecutive batches of
    ``batch_size``; batch b draws from the stream ``SeedSequence(seed,
    spawn_key=(stream, b))``, so results do not depend on ``threads`` and
    two configs differing only in ``stream`` are independent.
    """

    measure: LambdaMeasure = field(default_factory=lambda: as_measure(1.0))
    seed: int = DEFAULT_SEED
    replicas: int = 1
    size: int = 2
    start: int = 1
    horizon: float | None = None
    batch_size: int = DEFAULT_BATCH
    stream: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "measure", as_measure(self.measure))
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.batch_size < 1 or self.threads < 1:
            raise ValueError("batch_size and threads must be >= 1")
        if self.horizon is not None and not self.horizon >= 0:
            raise ValueError("horizon must be non-negative")

    def batches(self) -> list[tuple[int, int]]:
        """(batch index, batch size) pairs covering all replicas."""
        full, rest = divmod(self.replicas, self.batch_size)
        sizes = [self.batch_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))

    def rng(self, batch: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream, batch)))
        )

    def describe(self) -> dict:
        """Plain-data view for reports; enough to re-run the simulation."""
        m = self.measure
        return {
            "measure": {"alpha": m.alpha} if m.is_beta else {"generic": m.label},
            "seed": self.seed,
            "replicas": self.replicas,
            "size": self.size,
            "start": self.start,
            "horizon": self.horizon,
            "batch_size": self.batch_size,
            "stream": self.stream,
        }


def run_batches(cfg: SimConfig, work: Callable[[int, np.random.Generator], T]) -> list[T]:
    """Run ``work(batch_size, rng)`` for every batch; results in batch order."""
    jobs = [(n, cfg.rng(b)) for b, n in cfg.batches()]
    if cfg.threads == 1 or len(jobs) == 1:
        return [work(n, g) for n, g in jobs]
    with ThreadPoolExecutor(cfg.threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))
