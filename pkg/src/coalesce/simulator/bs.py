"""The Bolthausen-Sznitman case (alpha = 1): the branching process behind
the fixation line and the depth of large samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from coalesce.simulator.chains import sim_block_counting
from coalesce.simulator.config import SimConfig, run_batches

__all__ = ["BranchingResult", "POPULATION_CAP", "sim_bs_branching", "sim_bs_depth"]

POPULATION_CAP = 10**9


def _require_bs(cfg: SimConfig):
    if cfg.measure.alpha != 1.0:
        raise ValueError("only defined for the Bolthausen-Sznitman coalescent (alpha = 1)")


@dataclass(frozen=True, eq=False)
class BranchingResult:
    """L_1(t) per replica as ``log_size`` (sizes overflow floats quickly).

    ``truncated`` marks chain runs stopped at the population cap; their
    ``log_size`` is a lower bound.
    """

    t: float
    log_size: np.ndarray
    truncated: np.ndarray

    @property
    def replicas(self) -> int:
        return self.log_size.size

    @property
    def size(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.floor(np.exp(self.log_size) + 0.5)

    @property
    def statistic(self) -> np.ndarray:
        """e^{-t} log L_1(t)."""
        return math.exp(-self.t) * self.log_size


def _exact_batch(t, size, rng):
    # L_1(t) has generating function 1 - (1 - s)^a with a = e^{-t}: a
    # geometric law on {1, 2, ...} whose success probability is Beta(a, 1 - a).
    a = math.exp(-t)
    if a == 1.0:
        return np.zeros(size), np.zeros(size, dtype=bool)
    # Beta(a, 1-a) = G1 / (G1 + G2); small-shape gammas in log space
    log_g1 = np.log(rng.gamma(a + 1.0, size=size)) + np.log(rng.random(size)) / a
    log_g2 = np.log(rng.gamma(1.0 - a, size=size))
    log_p = log_g1 - np.logaddexp(log_g1, log_g2)
    u = 1.0 - rng.random(size)
    with np.errstate(divide="ignore"):
        # number of trials up to the first success, in log space
        denom = -np.log1p(-np.exp(log_p))
        tiny = log_p < -30
        trials = np.floor(-np.log(u) / np.where(tiny, 1.0, denom)) + 1.0
        log_size = np.where(
            tiny,
            np.log(-np.log(u) + np.exp(log_p)) - log_p,  # L ~ E / p for p -> 0
            np.log(trials),
        )
    return log_size, np.zeros(size, dtype=bool)


def _chain_batch(t, cap, size, rng):
    level = np.ones(size, dtype=np.int64)
    clock = np.zeros(size)
    truncated = np.zeros(size, dtype=bool)
    idx = np.arange(size)
    while idx.size:
        i = level[idx]
        clock[idx] += rng.exponential(size=idx.size) / i  # rate Lambda_{i+1} = i
        running = clock[idx] <= t
        idx, i = idx[running], i[running]
        jump = np.floor(1.0 / (1.0 - rng.random(idx.size)))  # P(jump >= m) = 1/m
        nxt = i + np.minimum(jump, cap).astype(np.int64)
        over = nxt > cap
        truncated[idx[over]] = True
        level[idx] = np.minimum(nxt, cap)
        idx = idx[~over]
    return np.log(level.astype(float)), truncated


def sim_bs_branching(
    t: float, cfg: SimConfig, *, method: str = "exact", cap: int = POPULATION_CAP
) -> BranchingResult:
    """Population L_1(t) of the branching process started from one particle.

    ``method="exact"`` samples the time-t marginal law directly;
    ``method="chain"`` runs the alpha = 1 fixation line and flags runs that
    pass ``cap``.
    """
    _require_bs(cfg)
    if not t >= 0:
        raise ValueError("t must be >= 0")
    if method == "exact":
        parts = run_batches(cfg, lambda size, rng: _exact_batch(t, size, rng))
    elif method == "chain":
        parts = run_batches(cfg, lambda size, rng: _chain_batch(t, cap, size, rng))
    else:
        raise ValueError(f"unknown method {method!r}")
    return BranchingResult(
        t, np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    )


def sim_bs_depth(n: int, cfg: SimConfig) -> np.ndarray:
    """Samples of tau_1^n - log log n."""
    _require_bs(cfg)
    if n < 3:
        raise ValueError("n must be >= 3")
    cfg = SimConfig(**{**cfg.__dict__, "size": n})
    return sim_block_counting(cfg, visits=False).depth - math.log(math.log(n))
