"""Special functions, double-exponential quadrature on (0, 1) and the
discrete renewal recursion.

Integrands handed to :func:`integrate_01` are evaluated on float64 arrays.
Pass ``complement=True`` to receive ``(x, 1 - x)`` with the complement
computed exactly from the transform, which is what keeps singularities at
``x = 1`` resolvable in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

__all__ = [
    "AccuracyError",
    "QuadratureResult",
    "RenewalSequence",
    "integrate_01",
    "log_beta",
    "log_gamma",
    "log_gamma_ratio",
    "renewal_sequence",
]

MAX_EVALUATIONS = 2**20
# pi * sinh(6) ~ 634, so the extreme nodes sit ~1e-275 away from 0 and 1.
_T_MAX = 6.0
_MIN_LEVEL = 3
_EDGE = 1.5e-8


class AccuracyError(ArithmeticError):
    """Quadrature did not reach its tolerance within the evaluation budget."""

    def __init__(self, message: str, estimate: "QuadratureResult"):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be non-negative")
        if self.evaluations < 1:
            raise ValueError("evaluations must be >= 1")

    def __float__(self) -> float:
        return self.value


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise ValueError(f"log_beta requires a, b > 0, got ({a!r}, {b!r})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


# Stirling corrections B_2k / (2k (2k - 1)), good to ~1e-19 once z >= 10
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360)
_STIRLING_FROM = 10.0


def _stirling_tail(z):
    inv = 1.0 / z
    w = inv * inv
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * w + c
    return acc * inv


def _ratio_scalar(a: float, b: float, base: float) -> float:
    za, zb = base + a, base + b
    if not (za > 0 and zb > 0):
        raise ValueError("log_gamma_ratio requires positive arguments")
    if min(za, zb) < _STIRLING_FROM:
        return math.lgamma(za) - math.lgamma(zb)
    d = a - b
    return (za - 0.5) * math.log1p(d / zb) + d * math.log(zb) - d + _stirling_tail(za) - _stirling_tail(zb)


def log_gamma_ratio(a, b, base=0.0):
    """log(Gamma(base + a) / Gamma(base + b)), elementwise.

    Keep the large part of the argument in ``base`` and the shifts small:
    ``a - b`` is then formed exactly, and for large arguments the ratio is
    built from Stirling's series with log1p instead of subtracting two
    nearly equal lgamma values.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(base) == 0:
        return _ratio_scalar(float(a), float(b), float(base))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    za, zb = base + a, base + b
    za, zb = np.broadcast_arrays(za, zb)
    if not (za.min(initial=1.0) > 0 and zb.min(initial=1.0) > 0):
        raise ValueError("log_gamma_ratio requires positive arguments")
    d = np.broadcast_to(a - b, za.shape)
    low = np.minimum(za, zb) < _STIRLING_FROM
    with np.errstate(invalid="ignore", divide="ignore"):  # small arguments are redone below
        out = (za - 0.5) * np.log1p(d / zb) + d * np.log(zb) - d
        out += _stirling_tail(za) - _stirling_tail(zb)
    if low.any():
        out[low] = gammaln(za[low]) - gammaln(zb[low])
    return out


def _nodes(t: np.ndarray):
    s = math.pi * np.sinh(t)
    # logistic form gives both x and 1-x without cancellation
    x = 1.0 / (1.0 + np.exp(-s))
    xc = 1.0 / (1.0 + np.exp(s))
    w = math.pi * np.cosh(t) * x * xc
    return x, xc, w


def _call(f, x, xc, complement):
    args = (x, xc) if complement else (x,)
    try:
        y = np.asarray(f(*args), dtype=float)
        if y.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        y = np.array([f(*a) for a in zip(*args)], dtype=float)
    return y


def _level_sum(f, t, complement):
    x, xc, w = _nodes(t)
    if complement:
        keep = (x > 0) & (xc > 0)
    else:
        # x has rounded onto an endpoint; the tail there is below resolution
        keep = (x > 0) & (x < 1)
    x, xc, w = x[keep], xc[keep], w[keep]
    with np.errstate(all="ignore"):
        y = _call(f, x, xc, complement)
    finite = np.isfinite(y)
    if not finite.all():
        # 0/0 from rounding right at an endpoint is dropped; anything else is a bug
        edge = np.minimum(x, xc) < _EDGE
        if np.any(~finite & ~edge):
            bad = x[~finite & ~edge][0]
            raise FloatingPointError(f"integrand not finite at x={bad!r}")
        w, y = w[finite], y[finite]
    return math.fsum(w * y), int(keep.sum())


def integrate_01(
    f: Callable,
    tol: float = 1e-12,
    *,
    rel_tol: float = 1e-12,
    complement: bool = False,
    max_evaluations: int = MAX_EVALUATIONS,
) -> QuadratureResult:
    """Integrate ``f`` over the open interval (0, 1).

    Tanh-sinh rule with the step halved each level; endpoints are never
    evaluated. Converged once two successive levels differ by at most
    ``max(tol, rel_tol * |I|)``.

    Raises
    ------
    AccuracyError
        Budget exhausted; the best estimate rides on the exception.
    """
    if not tol >= 0 or not rel_tol >= 0 or tol == rel_tol == 0:
        raise ValueError("need tol >= 0, rel_tol >= 0, not both zero")

    h = 1.0
    k = np.arange(-int(_T_MAX / h), int(_T_MAX / h) + 1)
    total, evals = _level_sum(f, k * h, complement)
    estimate = total * h
    err = math.inf
    level = 0
    while True:
        level += 1
        h /= 2
        n = int(_T_MAX / h)
        odd = np.arange(-n + (1 - n % 2), n + 1, 2)
        s, m = _level_sum(f, odd * h, complement)
        total += s
        evals += m
        new = total * h
        err = abs(new - estimate)
        estimate = new
        if level >= _MIN_LEVEL and err <= max(tol, rel_tol * abs(estimate)):
            return QuadratureResult(estimate, err, max(evals, 1))
        if evals + 2 * odd.size > max_evaluations:
            best = QuadratureResult(estimate, err, max(evals, 1))
            raise AccuracyError(
                f"no convergence after {evals} evaluations (error ~ {err:.3g})", best
            )


@dataclass(frozen=True)
class RenewalSequence:
    """u[k] = P(k in S) for a renewal set S containing 0."""

    alpha: float | str
    u: np.ndarray

    def __post_init__(self):
        if self.u.ndim != 1 or self.u.size == 0 or self.u[0] != 1.0:
            raise ValueError("renewal sequence must start with u[0] == 1")

    def __len__(self):
        return self.u.size

    def __getitem__(self, k):
        return self.u[k]

    @property
    def m_max(self) -> int:
        return self.u.size - 1


def _eval_eta(eta, m_max: int) -> np.ndarray:
    j = np.arange(1, m_max + 1)
    try:
        vals = np.asarray(eta(j), dtype=float)
        if vals.shape != j.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([eta(int(i)) for i in j], dtype=float)
    return vals


def renewal_sequence(
    eta: Callable, m_max: int, alpha: float | str = "generic"
) -> RenewalSequence:
    """Renewal measure of an interarrival law ``eta`` on {1, 2, ...}.

    ``u[k] = sum_{j=1..k} eta{j} u[k-j]`` evaluated forward from u[0] = 1.
    """
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    u = np.empty(m_max + 1)
    u[0] = 1.0
    if m_max == 0:
        return RenewalSequence(alpha, u)
    e = _eval_eta(eta, m_max)
    if np.any(e < 0) or e.sum() > 1 + 1e-12:
        raise ValueError("eta must be a sub-probability on {1, 2, ...}")
    for k in range(1, m_max + 1):
        u[k] = np.dot(e[:k], u[k - 1 :: -1])
    return RenewalSequence(alpha, u)
