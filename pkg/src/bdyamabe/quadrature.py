"""Closed-form Beta-type integrals, log-cutoff asymptotics, adaptive quadrature.

Two families of one-dimensional integrals carry every closed-form constant:

* radial:  ``R(p, q) = int_0^inf t^p (t^2+1)^(-q) dt``
* axial:   ``A(a, b) = int_0^inf t^a (t+1)^(-b) dt``

Both are evaluated exactly.  The Gauss-Kronrod routines are the independent
numerical oracle that the exact values are checked against.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .scalars import AsymptoticValue, ExactScalar

__all__ = [
    "DivergentIntegralError",
    "LogFit",
    "QuadResult",
    "QuadratureError",
    "adaptive",
    "adaptive_2d",
    "axial_closed",
    "fit_log_series",
    "gamma_half_integer",
    "harmonic_number",
    "log_cutoff_fit",
    "radial_closed",
]


class DivergentIntegralError(ValueError):
    """Parameters outside the convergence region; the message names the end."""


class QuadratureError(RuntimeError):
    """Adaptive subdivision hit its interval budget before reaching tolerance."""


def gamma_half_integer(x: Fraction) -> tuple[Fraction, int]:
    """``Gamma(x)`` for positive ``x`` in (1/2)Z as ``(c, k)`` meaning ``c * sqrt(pi)**k``."""
    x = Fraction(x)
    if x <= 0 or (2 * x).denominator != 1:
        raise ValueError(f"Gamma argument must be a positive half-integer, got {x}")
    if x.denominator == 1:
        return Fraction(math.factorial(int(x) - 1)), 0
    j = int(x - Fraction(1, 2))
    return Fraction(math.factorial(2 * j), 4**j * math.factorial(j)), 1


def _beta(a: Fraction, b: Fraction) -> ExactScalar:
    ca, ka = gamma_half_integer(a)
    cb, kb = gamma_half_integer(b)
    cab, kab = gamma_half_integer(a + b)
    coeff = ca * cb / cab
    sqrt_pi_power = ka + kb - kab
    if sqrt_pi_power == 0:
        return ExactScalar(coeff)
    if sqrt_pi_power == 2:
        return ExactScalar.pi(coeff)
    raise AssertionError("half-integer Beta values carry pi**0 or pi**1 only")


def radial_closed(p: int, q: Fraction | int) -> ExactScalar:
    """Exact ``int_0^inf t^p (t^2+1)^(-q) dt = B((p+1)/2, q-(p+1)/2) / 2``."""
    q = Fraction(q)
    if (2 * q).denominator != 1:
        raise ValueError(f"2q must be an integer, got q={q}")
    if p <= -1:
        raise DivergentIntegralError(f"t^{p} is not integrable at t=0")
    if 2 * q - p <= 1:
        raise DivergentIntegralError(f"R({p}, {q}) diverges at t=infinity (needs 2q - p > 1)")
    a = Fraction(p + 1, 2)
    return _beta(a, q - a) / 2


def harmonic_number(a: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, a + 1)), Fraction(0))


def axial_closed(a: int, b: int) -> ExactScalar | AsymptoticValue:
    """Exact ``int_0^inf t^a (t+1)^(-b) dt``.

    With ``u = t+1`` the integrand expands as
    ``sum_k C(a,k) (-1)^(a-k) u^(k-b)`` and each power integrates on
    ``[1, inf)`` in closed form.  When ``b - a = 1`` the ``k = a`` term is
    ``1/u``; the result is then ``log R - H_a + o(1)`` for cutoff ``R``.
    """
    if a < 0:
        raise DivergentIntegralError(f"t^{a} is not integrable at t=0")
    gap = b - a
    if gap < 1:
        raise DivergentIntegralError(
            f"A({a}, {b}) diverges polynomially at t=infinity (b - a = {gap})"
        )
    total = Fraction(0)
    for k in range(a + 1):
        exponent = k - b + 1  # antiderivative power of u
        if exponent == 0:
            continue
        total += Fraction(math.comb(a, k) * (-1) ** (a - k), -exponent)
    if gap == 1:
        return AsymptoticValue(ExactScalar(1), float(total), True)
    return ExactScalar(total)


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[1:7:2] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    intervals: int
    converged: bool

    def __float__(self) -> float:
        return self.value


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    kronrod = half * float(fx @ _KRONROD_W)
    gauss = half * float(fx @ _GAUSS_W)
    return kronrod, abs(kronrod - gauss)


def _map_infinite(
    f: Callable[[np.ndarray], np.ndarray], a: float
) -> Callable[[np.ndarray], np.ndarray]:
    # t = a + x/(1-x) sends [0, 1) onto [a, inf)
    def g(x: np.ndarray) -> np.ndarray:
        one_minus = 1.0 - x
        return f(a + x / one_minus) / one_minus**2

    return g


def adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-13,
    rel_tol: float = 1e-12,
    max_intervals: int = 2000,
    breakpoints: Sequence[float] = (),
    allow_coarse: bool = False,
) -> QuadResult:
    """Globally adaptive GK15 integration of a vectorized ``f`` over ``[a, b]``.

    ``b`` may be ``inf``.  The interval with the largest Kronrod-Gauss gap is
    bisected until ``error <= max(abs_tol, rel_tol*|value|)``.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0, True)
    if b < a:
        r = adaptive(f, b, a, abs_tol=abs_tol, rel_tol=rel_tol,
                     max_intervals=max_intervals, breakpoints=breakpoints,
                     allow_coarse=allow_coarse)
        return QuadResult(-r.value, r.error, r.intervals, r.converged)

    g, lo, hi = f, float(a), float(b)
    cuts = sorted(float(c) for c in breakpoints if a < c < b)
    if math.isinf(hi):
        g, lo, hi = _map_infinite(f, lo), 0.0, 1.0
        cuts = [(c - a) / (1.0 + c - a) for c in cuts]
    edges = [lo, *cuts, hi]

    heap: list[tuple[float, float, float, float]] = []
    total = err = 0.0
    for left, right in itertools.pairwise(edges):
        v, e = _gk15(g, left, right)
        heapq.heappush(heap, (-e, left, right, v))
        total += v
        err += e

    while err > max(abs_tol, rel_tol * abs(total)):
        if len(heap) >= max_intervals:
            if allow_coarse:
                return QuadResult(total, err, len(heap), False)
            raise QuadratureError(
                f"no convergence after {len(heap)} intervals: value {total!r} +- {err:.3e}"
            )
        neg_e, left, right, v = heapq.heappop(heap)
        mid = 0.5 * (left + right)
        v1, e1 = _gk15(g, left, mid)
        v2, e2 = _gk15(g, mid, right)
        heapq.heappush(heap, (-e1, left, mid, v1))
        heapq.heappush(heap, (-e2, mid, right, v2))
        total += v1 + v2 - v
        err += e1 + e2 + neg_e
    # re-sum to shed accumulated rounding from the running updates
    total = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, err, len(heap), True)


def adaptive_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x_range: tuple[float, float],
    y_range: tuple[float, float] | Callable[[float], tuple[float, float]],
    *,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-10,
    inner_rel_tol: float | None = None,
    max_intervals: int = 2000,
    x_breakpoints: Sequence[float] = (),
    y_breakpoints: Sequence[float] = (),
) -> QuadResult:
    """Iterated adaptive integration ``int dx int dy f(x, y)``.

    ``y_range`` may depend on ``x``.  The inner tolerance defaults to a
    hundredth of the outer relative tolerance.
    """
    inner_rel = rel_tol * 1e-2 if inner_rel_tol is None else inner_rel_tol
    inner_err = 0.0

    def inner(xs: np.ndarray) -> np.ndarray:
        nonlocal inner_err
        out = np.empty(len(xs))
        for k, x in enumerate(xs):
            lo, hi = y_range(x) if callable(y_range) else y_range
            r = adaptive(lambda y, x=x: f(np.full_like(y, x), y), lo, hi,
                         abs_tol=abs_tol * 1e-2, rel_tol=inner_rel,
                         max_intervals=max_intervals, breakpoints=y_breakpoints)
            out[k] = r.value
            inner_err = max(inner_err, r.error)
        return out

    outer = adaptive(inner, x_range[0], x_range[1], abs_tol=abs_tol,
                     rel_tol=rel_tol, max_intervals=max_intervals,
                     breakpoints=x_breakpoints)
    span = x_range[1] - x_range[0]
    spill = inner_err * (span if math.isfinite(span) else 1.0)
    return QuadResult(outer.value, outer.error + spill, outer.intervals, outer.converged)


@dataclass(frozen=True)
class LogFit:
    """Least-squares fit ``I(R) ~ log_coeff*log R + const + sum c_k R^-k``."""

    log_coeff: float
    const: float
    inverse_coeffs: tuple[float, ...]
    max_residual: float
    good_fit: bool

    @property
    def value(self) -> AsymptoticValue:
        return AsymptoticValue(ExactScalar(Fraction(self.log_coeff)), self.const, False)


def fit_log_series(
    cutoffs: Sequence[float],
    values: Sequence[float],
    *,
    inverse_powers: int = 0,
    residual_threshold: float = 1e-6,
) -> LogFit:
    """Fit ``c*log R + c0 + c1/R + ... + c_k/R^k`` to sampled cutoff values."""
    R = np.asarray(cutoffs, dtype=float)
    y = np.asarray(values, dtype=float)
    cols = [np.log(R), np.ones_like(R)] + [R ** (-k) for k in range(1, inverse_powers + 1)]
    if len(R) < len(cols):
        raise ValueError(f"need at least {len(cols)} cutoffs, got {len(R)}")
    design = np.column_stack(cols)
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.max(np.abs(design @ coeffs - y))) if len(R) else 0.0
    scale = max(1.0, float(np.max(np.abs(y))))
    return LogFit(
        log_coeff=float(coeffs[0]),
        const=float(coeffs[1]),
        inverse_coeffs=tuple(float(c) for c in coeffs[2:]),
        max_residual=resid,
        good_fit=resid <= residual_threshold * scale,
    )


def log_cutoff_fit(
    f: Callable[[np.ndarray], np.ndarray],
    cutoffs: Sequence[float] = (1e2, 1e3, 1e4, 1e5),
    *,
    lower: float = 0.0,
    inverse_powers: int = 0,
    rel_tol: float = 1e-12,
    residual_threshold: float = 1e-6,
) -> LogFit:
    """Integrate ``f`` on ``[lower, R]`` for each cutoff and fit the log growth."""
    cuts = sorted(float(c) for c in cutoffs)
    running = 0.0
    left = lower
    values = []
    for R in cuts:
        # geometric breakpoints keep the GK15 panels matched to the algebraic decay
        bps = np.geomspace(max(left, 1.0), R, 8)[1:-1] if R > max(left, 1.0) else ()
        running += adaptive(f, left, R, rel_tol=rel_tol, abs_tol=1e-15,
                            breakpoints=bps).value
        values.append(running)
        left = R
    return fit_log_series(cuts, values, inverse_powers=inverse_powers,
                          residual_threshold=residual_threshold)
