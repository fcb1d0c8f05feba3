"""Driving measures and transition rates of the block counting process and
the fixation line.

Conventions (all for ``1 <= i < j``):

* ``block_rate(m, j, i)``      rate of the block counting process j -> i
* ``fixation_rate(m, i, j)``   rate of the fixation line i -> j
* ``total_rate(m, j)``         Lambda_j, total rate out of j blocks; also the
  rate at which the fixation line leaves level j - 1
* ``interarrival(alpha, m)``   eta{m}, the law of fixation-line jump sizes in
  the Beta(2 - alpha, alpha) case

Beta rates are closed-form Gamma ratios computed in log space. Generic
measures go through :func:`coalesce.numerics.integrate_01`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import betainc, gammaln

from coalesce.numerics import integrate_01, log_gamma_ratio

__all__ = [
    "LambdaMeasure",
    "RateTable",
    "as_measure",
    "block_rate",
    "block_tail_rate",
    "embedded_transition",
    "fixation_rate",
    "fixation_tail_rate",
    "interarrival",
    "interarrival_tail",
    "total_rate",
]

MASS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LambdaMeasure:
    """A probability measure on (0, 1) without atoms.

    Build with :meth:`beta` or :meth:`from_density`. A generic density is
    called as ``density(x)`` or, with ``complement=True``, as
    ``density(x, 1 - x)``.
    """

    alpha: float | None = None
    density: Callable | None = None
    complement: bool = False
    mass: float = 1.0
    label: str = ""
    breakpoints: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def beta(cls, alpha: float) -> "LambdaMeasure":
        alpha = float(alpha)
        if not 0 < alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
        return cls(alpha=alpha, label=f"beta(alpha={alpha!r})")

    @classmethod
    def from_density(
        cls,
        density: Callable,
        *,
        complement: bool = False,
        normalize: bool = False,
        label: str = "generic",
        breakpoints=(),
    ) -> "LambdaMeasure":
        """``breakpoints`` are interior points where the density is not smooth;
        integrals are then taken piece by piece."""
        breakpoints = tuple(sorted(float(b) for b in breakpoints))
        if any(not 0 < b < 1 for b in breakpoints):
            raise ValueError("breakpoints must lie in (0, 1)")
        args = (lambda x, xc: density(x, xc)) if complement else (lambda x, xc: density(x))
        mass = _integrate_pieces(args, breakpoints)
        if not mass > 0:
            raise ValueError("density has no mass on (0, 1)")
        if normalize:
            f, scale = density, mass
            density = (lambda x, xc: f(x, xc) / scale) if complement else (lambda x: f(x) / scale)
            mass = 1.0
        elif abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"density integrates to {mass!r}, expected 1")
        return cls(
            density=density, complement=complement, mass=mass, label=label, breakpoints=breakpoints
        )

    @property
    def is_beta(self) -> bool:
        return self.alpha is not None

    def __call__(self, x, xc=None):
        """Density at x; ``xc`` (= 1 - x) may be supplied for accuracy near 1."""
        x = np.asarray(x, dtype=float)
        xc = 1.0 - x if xc is None else np.asarray(xc, dtype=float)
        if self.is_beta:
            a = self.alpha
            return np.exp(
                (1 - a) * np.log(x) + (a - 1) * np.log(xc) - gammaln(2 - a) - gammaln(a)
            )
        return self.density(x, xc) if self.complement else self.density(x)

    def integrate(self, kernel: Callable, **kw) -> float:
        """Integral of ``kernel(x, 1 - x) * density`` over (0, 1)."""
        kw.setdefault("tol", 0.0)
        return _integrate_pieces(lambda x, xc: kernel(x, xc) * self(x, xc), self.breakpoints, **kw)

    def __repr__(self):
        return f"LambdaMeasure({self.label})"


def _integrate_pieces(f, breakpoints, **kw) -> float:
    """Integral of f(x, 1 - x) over (0, 1), split at ``breakpoints``."""
    if not breakpoints:
        return integrate_01(f, complement=True, **kw).value
    edges = (0.0, *breakpoints, 1.0)
    total = []
    for a, b in zip(edges[:-1], edges[1:]):
        w = b - a

        def piece(y, yc, a=a, b=b, w=w):
            return w * f(a + w * y, (1.0 - b) + w * yc)

        total.append(integrate_01(piece, complement=True, **kw).value)
    return math.fsum(total)


def as_measure(m) -> LambdaMeasure:
    """Accept a LambdaMeasure or a bare alpha for the Beta family."""
    if isinstance(m, LambdaMeasure):
        return m
    return _beta_measure(float(m))


@lru_cache(maxsize=64)
def _beta_measure(alpha: float) -> LambdaMeasure:
    return LambdaMeasure.beta(alpha)


def _check_pair(lo, hi, what):
    if not (1 <= lo < hi):
        raise ValueError(f"{what}: need 1 <= {lo} < {hi}")


# -- Beta closed forms (log space) ------------------------------------------


def _log_total(alpha, j):
    # Lambda_j = Gamma(j - 1 + alpha) / (Gamma(alpha + 1) Gamma(j - 1))
    return log_gamma_ratio(alpha - 1, -1, base=j) - gammaln(alpha + 1)


def _log_eta(alpha, m):
    return (
        math.log(alpha) - gammaln(2 - alpha) + log_gamma_ratio(1 - alpha, 2, base=m)
    )


def _log_eta_tail(alpha, m):
    # sum_{k >= m} eta{k} telescopes to Gamma(m + 1 - alpha) / (Gamma(2 - alpha) Gamma(m + 1))
    return log_gamma_ratio(1 - alpha, 1, base=m) - gammaln(2 - alpha)


_ratio_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}


def _block_logs(alpha, upto):
    """Cached per alpha: A[k] = log Gamma(k - alpha)/Gamma(k + 1) for k >= 2 and
    B[i] = log Gamma(i - 1 + alpha)/Gamma(i) for i >= 1, both up to ``upto``."""
    have = _ratio_cache.get(alpha)
    if have is not None and have[0].size > upto:
        return have
    size = max(upto + 1, 2 * (have[0].size if have else 0), 256)
    k = np.arange(size, dtype=float)
    A = np.full(size, np.nan)
    A[2:] = log_gamma_ratio(-alpha, 1, base=k[2:])
    B = np.full(size, np.nan)
    B[1:] = log_gamma_ratio(alpha - 1, 0, base=k[1:])
    _ratio_cache[alpha] = (A, B)
    return A, B


def _log_block(alpha, j, i):
    k = j - i + 1
    A, B = _block_logs(alpha, int(np.max(j)))
    return np.log(j) + A[k] + B[i] - gammaln(2 - alpha) - gammaln(alpha)


# -- public rate functions --------------------------------------------------


def interarrival(alpha: float, m):
    """eta{m} = alpha / Gamma(2 - alpha) * Gamma(m - alpha + 1) / Gamma(m + 2)."""
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    m = np.asarray(m)
    if np.any(m < 1):
        raise ValueError("interarrival is supported on m >= 1")
    out = np.exp(_log_eta(alpha, m))
    return float(out) if out.ndim == 0 else out


def interarrival_tail(alpha: float, m):
    """P(eta >= m)."""
    m = np.asarray(m)
    if np.any(m < 1):
        raise ValueError("interarrival_tail needs m >= 1")
    out = np.exp(_log_eta_tail(alpha, m))
    return float(out) if out.ndim == 0 else out


def _binom(n, k):
    return math.comb(int(n), int(k))


def block_rate(m, j: int, i: int) -> float:
    """Lambda_{j,i} = C(j, j-i+1) int Lambda(dx) x^{j-i-1} (1-x)^{i-1}."""
    _check_pair(i, j, "block_rate")
    m = as_measure(m)
    if m.is_beta:
        return float(np.exp(_log_block(m.alpha, j, i)))
    k = j - i + 1
    return _binom(j, k) * m.integrate(lambda x, xc: x ** (k - 2) * xc ** (i - 1))


def fixation_rate(m, i: int, j: int) -> float:
    """Gamma~_{i,j} = C(j, j-i+1) int Lambda(dx) x^{j-i-1} (1-x)^i."""
    _check_pair(i, j, "fixation_rate")
    m = as_measure(m)
    if m.is_beta:
        a = m.alpha
        return float(np.exp(_log_total(a, i + 1) + _log_eta(a, j - i)))
    k = j - i + 1
    return _binom(j, k) * m.integrate(lambda x, xc: x ** (k - 2) * xc**i)


def total_rate(m, j: int) -> float:
    """Lambda_j = sum_{i<j} Lambda_{j,i}."""
    if j < 2:
        raise ValueError("total_rate needs j >= 2")
    m = as_measure(m)
    if m.is_beta:
        return float(np.exp(_log_total(m.alpha, j)))
    # P(Bin(j, x) >= 2) / x^2
    return m.integrate(lambda x, xc: betainc(2, j - 1, x) / x**2)


def fixation_tail_rate(m, i: int, j: int) -> float:
    """Gamma~_{i,>=j}: rate at which the fixation line jumps from i to >= j."""
    _check_pair(i, j, "fixation_tail_rate")
    m = as_measure(m)
    if m.is_beta:
        a = m.alpha
        return float(np.exp(_log_total(a, i + 1) + _log_eta_tail(a, j - i)))
    # 1 - sum_{k<=j-i} C(k+i-1,k) x^k (1-x)^i  ==  P(Bin(j, x) >= j-i+1)
    return m.integrate(lambda x, xc: betainc(j - i + 1, i, x) / x**2)


def block_tail_rate(m, j: int, i: int) -> float:
    """Lambda_{j,<=i}: rate at which j blocks drop to at most i."""
    _check_pair(i, j, "block_tail_rate")
    m = as_measure(m)
    if m.is_beta:
        k = np.arange(1, i + 1)
        return math.fsum(np.exp(_log_block(m.alpha, j, k)))
    return math.fsum(block_rate(m, j, k) for k in range(1, i + 1))


def embedded_transition(m, j: int, i: int) -> float:
    """P_{ji} = Lambda_{j,i} / Lambda_j."""
    _check_pair(i, j, "embedded_transition")
    m = as_measure(m)
    if m.is_beta:
        return float(np.exp(_log_block(m.alpha, j, i) - _log_total(m.alpha, j)))
    return block_rate(m, j, i) / total_rate(m, j)


class RateTable:
    """Cached rates up to a state cap, extended on demand.

    Rows are computed on first access and kept; nothing cached is ever
    rewritten, so a warmed-up table can be shared read-only.
    """

    def __init__(self, measure, cap: int = 10_000):
        self.measure = as_measure(measure)
        self.cap = 1
        self._totals = np.array([np.nan, np.nan])  # index = number of blocks
        self._block_rows: dict[int, np.ndarray] = {}
        self._fix_rows: dict[tuple[int, int], np.ndarray] = {}
        self.extend(cap)

    def extend(self, cap: int) -> None:
        if cap <= self.cap:
            return
        j = np.arange(self.cap + 1, cap + 1)
        j = j[j >= 2]
        if self.measure.is_beta:
            new = np.exp(_log_total(self.measure.alpha, j))
        else:
            new = np.array([total_rate(self.measure, int(s)) for s in j])
        self._totals = np.concatenate([self._totals, new])
        self.cap = cap

    def _need(self, j):
        if j > self.cap:
            self.extend(max(j, 2 * self.cap))

    def total(self, j: int) -> float:
        self._need(j)
        return float(self._totals[j])

    def totals(self, upto: int) -> np.ndarray:
        """Array t with t[j] = Lambda_j for 2 <= j <= upto (t[0], t[1] are nan)."""
        self._need(upto)
        return self._totals[: upto + 1]

    def block_row(self, j: int) -> np.ndarray:
        """Lambda_{j,i} for i = 1..j-1 (index i-1)."""
        row = self._block_rows.get(j)
        if row is None:
            self._need(j)
            if self.measure.is_beta:
                row = np.exp(_log_block(self.measure.alpha, j, np.arange(1, j)))
            else:
                row = np.array([block_rate(self.measure, j, i) for i in range(1, j)])
            row.setflags(write=False)
            self._block_rows[j] = row
        return row

    def embedded_row(self, j: int) -> np.ndarray:
        return self.block_row(j) / self.total(j)

    def fixation_row(self, i: int, upto: int) -> np.ndarray:
        """Gamma~_{i,k} for k = i+1..upto (index k-i-1)."""
        key = (i, upto)
        row = self._fix_rows.get(key)
        if row is None:
            if self.measure.is_beta:
                a = self.measure.alpha
                row = np.exp(_log_total(a, i + 1) + _log_eta(a, np.arange(1, upto - i + 1)))
            else:
                row = np.array(
                    [fixation_rate(self.measure, i, k) for k in range(i + 1, upto + 1)]
                )
            row.setflags(write=False)
            self._fix_rows[key] = row
        return row
