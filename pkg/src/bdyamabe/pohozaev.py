"""Pohozaev boundary functionals, the reduced F-form, and the mass flux integral.

Fields on the half-space come in three symmetry classes:

* ``RadialField``    U = F(|x_bar|^2, x_N)
* ``QuadraticField`` U = h(x_bar) F(|x_bar|^2, x_N),  h = pi_ij x_i x_j
* ``GeneralField``   any evaluator of value and gradient

The symmetric classes reduce every surface and volume integral to one or two
dimensions by averaging over the tangential sphere; the general class falls
back to a hyperspherical product rule.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, runtime_checkable

import numpy as np

from . import bubble
from . import quadrature as Q
from ._jets import QTJet, lift_quadratic, lift_radial
from .corrections import CorrectionParams, phi_delta_jet, phi_jet
from .scalars import ExactScalar, sphere_area
from .tensors import (
    MetricJet,
    Poly,
    TraceFreePi,
    _padd,
    hemisphere_integral,
    metric_jet_polynomials,
    poly_derivative,
    poly_times_var,
)

__all__ = [
    "FFormResult",
    "FieldOnHalfSpace",
    "FluxReport",
    "GeneralField",
    "MassFluxReport",
    "MassRelation",
    "QuadraticField",
    "RadialField",
    "bubble_field",
    "correction_field",
    "eval_P_prime",
    "f_form",
    "mass_flux",
    "mass_flux_a_part",
    "mass_flux_coefficient",
    "p_prime_mass_relation",
    "phi_delta_field",
    "poho_identity_residual",
    "singular_field",
    "sphere_rule",
    "unit_second_derivative_jet",
]

Profile = Callable[[np.ndarray, np.ndarray], QTJet]
Scalar = float | Callable[[np.ndarray], np.ndarray]


# --------------------------------------------------------------------------
# fields

@runtime_checkable
class FieldOnHalfSpace(Protocol):
    N: int
    symmetry: str

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


def _split(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    xbar = x[..., :-1]
    return xbar, np.einsum("...i,...i->...", xbar, xbar), x[..., -1]


@dataclass(frozen=True)
class RadialField:
    N: int
    profile: Profile
    symmetry: str = field(default="radial", init=False)

    def jet(self, q: np.ndarray, t: np.ndarray) -> QTJet:
        return self.profile(np.asarray(q, dtype=float), np.asarray(t, dtype=float))

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xbar, q, t = _split(x)
        v, g, _ = lift_radial(self.jet(q, t), xbar)
        return v, g


@dataclass(frozen=True)
class QuadraticField:
    N: int
    pi: TraceFreePi
    profile: Profile
    symmetry: str = field(default="quadratic", init=False)

    def jet(self, q: np.ndarray, t: np.ndarray) -> QTJet:
        return self.profile(np.asarray(q, dtype=float), np.asarray(t, dtype=float))

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xbar, q, t = _split(x)
        v, g, _ = lift_quadratic(self.jet(q, t), xbar, self.pi.as_array())
        return v, g


@dataclass(frozen=True)
class GeneralField:
    N: int
    evaluator: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    symmetry: str = field(default="general", init=False)

    def value_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluator(np.asarray(x, dtype=float))


def bubble_field(N: int, lam: float = 1.0) -> RadialField:
    return RadialField(N, lambda q, t: bubble.bubble_jet(N, q, t, lam))


def singular_field(N: int, constant: float = 0.0) -> RadialField:
    """``|x|^(2-N) + constant``."""
    def prof(q, t):
        base = QTJet.square_distance(q, t, 0.0).power((2 - N) / 2)
        return base + QTJet.constant(constant, base.v)
    return RadialField(N, prof)


def correction_field(c: CorrectionParams) -> QuadraticField:
    """``Phi`` of the given parameters (``eps`` included)."""
    return QuadraticField(c.N, c.pi, lambda q, t: phi_jet(c.N, c.a1, c.a2, q, t).scale(c.eps))


def phi_delta_field(c: CorrectionParams) -> QuadraticField:
    return QuadraticField(4, c.pi, lambda q, t: phi_delta_jet(c.delta, q, t).scale(c.eps))


# --------------------------------------------------------------------------
# quadrature on spheres

def sphere_rule(k: int, order: int, hemisphere: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Product Gauss rule on the unit ``k``-sphere in R^(k+1).

    With ``hemisphere`` the last coordinate is restricted to be >= 0.  The
    weights sum to the surface area.
    """
    if k == 0:
        pts = np.array([[1.0]]) if hemisphere else np.array([[-1.0], [1.0]])
        return pts, np.ones(len(pts))
    if k == 1 and not hemisphere:
        phi = 2 * np.pi * (np.arange(2 * order) + 0.5) / (2 * order)
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(2 * order, np.pi / order)
    lo, hi = 0.0, (np.pi / 2 if hemisphere else np.pi)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    phi = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    w_phi = 0.5 * (hi - lo) * weights * np.sin(phi) ** (k - 1)
    sub_pts, sub_w = sphere_rule(k - 1, order, False)
    pts = np.concatenate([np.sin(phi)[:, None, None] * sub_pts[None, :, :],
                          np.broadcast_to(np.cos(phi)[:, None, None], (order, len(sub_w), 1))], axis=-1)
    return pts.reshape(-1, k + 1), (w_phi[:, None] * sub_w[None, :]).ravel()


def _tangential_area(N: int) -> float:
    return float(sphere_area(N - 2))


def _theta_integral(g: Callable[[np.ndarray], np.ndarray], n: int, tol: float) -> Q.QuadResult:
    """``int_0^(pi/2) sin^(n-1)(theta) g(theta) dtheta``."""
    return Q.adaptive(lambda th: np.sin(th) ** (n - 1) * g(th), 0.0, np.pi / 2,
                      abs_tol=tol, rel_tol=tol)


def _eval_scalar(fn: Scalar | None, pts: np.ndarray) -> np.ndarray:
    if fn is None:
        return np.zeros(pts.shape[:-1])
    if callable(fn):
        return np.asarray(fn(pts), dtype=float)
    return np.full(pts.shape[:-1], float(fn))


def _radial_derivative(fn: Scalar | None, pts: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """``x . grad fn`` by a central difference along the ray."""
    if fn is None or not callable(fn):
        return np.zeros(pts.shape[:-1])
    return (np.asarray(fn(pts * (1 + h))) - np.asarray(fn(pts * (1 - h)))) / (2 * h)


# --------------------------------------------------------------------------
# Pohozaev functionals

@dataclass(frozen=True)
class FluxReport:
    rho: float
    P_prime: float
    P: float | None
    breakdown: dict[str, float]
    error: float

    def to_json(self) -> dict:
        return {"rho": self.rho, "P_prime": self.P_prime, "P": self.P,
                "breakdown": dict(self.breakdown), "error": self.error}


def _surface_radial(U: RadialField, rho: float, sign: float, tol: float) -> tuple[dict[str, float], float]:
    N, n = U.N, U.N - 1
    g = (N - 2) / 2
    area = _tangential_area(N) * rho ** (N - 1)

    def parts(th):
        q, t = (rho * np.sin(th)) ** 2, rho * np.cos(th)
        F = U.jet(q, t)
        radial = 2 * q * F.q + t * F.t  # x . grad U
        dnu = sign * radial / rho
        grad_sq = 4 * q * F.q**2 + F.t**2
        return F.v * dnu, grad_sq, dnu**2

    out, err = {}, 0.0
    for k, (name, coef) in enumerate((("u_dnu", -g), ("grad_sq", -rho / 2), ("dnu_sq", rho))):
        r = _theta_integral(lambda th, k=k: parts(th)[k], n, tol)
        out[name] = coef * area * r.value
        err += abs(coef) * area * r.error
    return out, err


def _surface_quadratic(U: QuadraticField, rho: float, sign: float, tol: float) -> tuple[dict[str, float], float]:
    N, n = U.N, U.N - 1
    g = (N - 2) / 2
    pi_sq = float(U.pi.norm_sq())
    c4 = 2 / (n * (n + 2))
    area = _tangential_area(N) * rho ** (N - 1) * pi_sq

    def parts(th):
        q, t = (rho * np.sin(th)) ** 2, rho * np.cos(th)
        F = U.jet(q, t)
        euler = 2 * F.v + 2 * q * F.q + t * F.t  # (x . grad U) / h
        dnu = sign * euler / rho
        grad_sq = 4 * q * F.v**2 / n + c4 * q * q * (8 * F.v * F.q + 4 * q * F.q**2 + F.t**2)
        return c4 * q * q * F.v * dnu, grad_sq, c4 * q * q * dnu**2

    out, err = {}, 0.0
    for k, (name, coef) in enumerate((("u_dnu", -g), ("grad_sq", -rho / 2), ("dnu_sq", rho))):
        r = _theta_integral(lambda th, k=k: parts(th)[k], n, tol)
        out[name] = coef * area * r.value
        err += abs(coef) * area * r.error
    return out, err


def _surface_general(U: FieldOnHalfSpace, rho: float, sign: float, order: int) -> tuple[dict[str, float], float]:
    N = U.N
    g = (N - 2) / 2

    def run(m):
        y, w = sphere_rule(N - 1, m, hemisphere=True)
        x = rho * y
        v, grad = U.value_grad(x)
        dnu = sign * np.einsum("...a,...a->...", grad, y)
        scale = rho ** (N - 1)
        return {"u_dnu": -g * scale * float(w @ (v * dnu)),
                "grad_sq": -rho / 2 * scale * float(w @ np.einsum("...a,...a->...", grad, grad)),
                "dnu_sq": rho * scale * float(w @ dnu**2)}

    fine, coarse = run(order), run(max(4, (2 * order) // 3))
    return fine, sum(abs(fine[k] - coarse[k]) for k in fine)


def _ring_term(U: FieldOnHalfSpace, rho: float, f: Scalar, p: float, order: int) -> float:
    N, n = U.N, U.N - 1
    if U.symmetry == "quadratic":
        if p != 1 or callable(f):
            raise ValueError("ring term for a quadratic field needs p = 1 and constant f")
        F = U.jet(np.array(rho * rho), np.array(0.0))
        c4 = 2 / (n * (n + 2))
        integral = float(f) * c4 * rho**4 * float(U.pi.norm_sq()) * float(F.v) ** 2 \
            * _tangential_area(N) * rho ** (n - 1)
        return rho / (p + 1) * integral
    if U.symmetry == "radial":
        xb = np.zeros((1, N))
        xb[0, 0] = rho
        u, _ = U.value_grad(xb)
        fv = _eval_scalar(f, xb[:, :-1])
        integral = float(fv[0] * u[0] ** (p + 1)) * _tangential_area(N) * rho ** (n - 1)
        return rho / (p + 1) * integral
    y, w = sphere_rule(n - 1, order)
    x = np.concatenate([rho * y, np.zeros((len(w), 1))], axis=-1)
    u, _ = U.value_grad(x)
    fv = _eval_scalar(f, x[:, :-1])
    return rho / (p + 1) * rho ** (n - 1) * float(w @ (fv * u ** (p + 1)))


def eval_P_prime(U: FieldOnHalfSpace, rho: float, N: int | None = None, *,
                 f: Scalar | None = None, p: float | None = None,
                 inward: bool = True, tol: float = 1e-12, order: int = 24) -> FluxReport:
    """Surface functional on the spherical cap of radius ``rho``.

    ``P'`` integrates ``-g U dU/dnu - (rho/2)|grad U|^2 + rho (dU/dnu)^2``
    with ``g = (N-2)/2``.  Passing ``f`` and ``p`` also returns
    ``P = P' + rho/(p+1) int_{|x_bar|=rho} f U^(p+1)``.  ``nu`` points to
    the origin unless ``inward`` is False.
    """
    N = U.N if N is None else N
    if N != U.N:
        raise ValueError("dimension mismatch between field and N")
    if not rho > 0:
        raise ValueError("rho must be positive")
    sign = -1.0 if inward else 1.0
    if U.symmetry == "radial":
        parts, err = _surface_radial(U, rho, sign, tol)
    elif U.symmetry == "quadratic":
        parts, err = _surface_quadratic(U, rho, sign, tol)
    else:
        parts, err = _surface_general(U, rho, sign, order)
    P_prime = sum(parts.values())
    P = None
    if f is not None:
        if p is None:
            raise ValueError("the ring term needs the exponent p")
        ring = _ring_term(U, rho, f, p, order)
        parts = {**parts, "ring": ring}
        P = P_prime + ring
    return FluxReport(float(rho), P_prime, P, parts, err)


def _disc_terms(U: FieldOnHalfSpace, rho: float, H: Scalar | None, f: Scalar, p: float,
                tol: float, order: int) -> dict[str, float]:
    N, n = U.N, U.N - 1
    g = (N - 2) / 2
    coef_f = (N - 1) / (p + 1) - g

    def integrand(xbar_pts: np.ndarray) -> dict[str, np.ndarray]:
        x = np.concatenate([xbar_pts, np.zeros(xbar_pts.shape[:-1] + (1,))], axis=-1)
        u, grad = U.value_grad(x)
        euler = np.einsum("...i,...i->...", grad[..., :-1], xbar_pts) + g * u
        up = u ** (p + 1)
        return {"H": g * _eval_scalar(H, xbar_pts) * euler * u,
                "f_gradient": _radial_derivative(f, xbar_pts) * up / (p + 1),
                "f": coef_f * _eval_scalar(f, xbar_pts) * up}

    if U.symmetry == "radial":
        area = _tangential_area(N)
        out = {}
        for name in ("H", "f_gradient", "f"):
            def fn(r, name=name):
                pts = np.zeros(r.shape + (n,))
                pts[..., 0] = r
                return r ** (n - 1) * integrand(pts)[name]
            out[name] = area * Q.adaptive(fn, 0.0, rho, abs_tol=tol, rel_tol=tol).value
        return out
    if U.symmetry == "quadratic":
        raise ValueError("the identity residual needs a radial or general field")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    r = 0.5 * rho * (nodes + 1)
    wr = 0.5 * rho * weights * r ** (n - 1)
    y, wy = sphere_rule(n - 1, order)
    pts = r[:, None, None] * y[None, :, :]
    vals = integrand(pts)
    return {k: float(np.einsum("i,j,ij->", wr, wy, v)) for k, v in vals.items()}


def _bulk_term(U: FieldOnHalfSpace, rho: float, Qsrc: Scalar | None, tol: float, order: int) -> float:
    if Qsrc is None:
        return 0.0
    N, n = U.N, U.N - 1
    g = (N - 2) / 2

    def integrand(x: np.ndarray) -> np.ndarray:
        u, grad = U.value_grad(x)
        return -_eval_scalar(Qsrc, x) * (np.einsum("...a,...a->...", grad, x) + g * u)

    if U.symmetry == "radial":
        def polar(rr, th):
            x = np.zeros(np.shape(rr) + (N,))
            x[..., 0] = rr * np.sin(th)
            x[..., -1] = rr * np.cos(th)
            return rr ** (N - 1) * np.sin(th) ** (n - 1) * integrand(x)
        res = Q.adaptive_2d(polar, (0.0, rho), (0.0, np.pi / 2), abs_tol=tol, rel_tol=1e-10)
        return _tangential_area(N) * res.value
    nodes, weights = np.polynomial.legendre.leggauss(order)
    r = 0.5 * rho * (nodes + 1)
    wr = 0.5 * rho * weights * r ** (N - 1)
    y, wy = sphere_rule(N - 1, order, hemisphere=True)
    vals = integrand(r[:, None, None] * y[None, :, :])
    return float(np.einsum("i,j,ij->", wr, wy, vals))


def poho_identity_residual(U: FieldOnHalfSpace, Qsrc: Scalar | None, H: Scalar | None,
                           f: Scalar, p: float, rho: float, *, inward: bool = True,
                           tol: float = 1e-12, order: int = 16) -> dict[str, float]:
    """``P(U, rho)`` minus the bulk and boundary right-hand side.

    ``Qsrc``, ``H`` and ``f`` are constants or vectorized callables (``Qsrc``
    of half-space points, ``H`` and ``f`` of boundary points ``x_bar``).  For a
    radial ``U`` they are sampled along one tangential ray, so they must be
    tangentially radial too.  Returns the residual and every piece.
    """
    if U.symmetry == "quadratic":
        raise ValueError("the identity residual needs a radial or general field")
    lhs = eval_P_prime(U, rho, f=f, p=p, inward=inward, tol=tol, order=order)
    bulk = _bulk_term(U, rho, Qsrc, tol, order)
    disc = _disc_terms(U, rho, H, f, p, tol, order)
    rhs = bulk + sum(disc.values())
    return {"residual": lhs.P - rhs, "P": lhs.P, "rhs": rhs, "Q": bulk, **disc,
            "quadrature_error": lhs.error}


# --------------------------------------------------------------------------
# reduced F-form

@dataclass(frozen=True)
class FFormResult:
    curvature: float
    pairing: float
    second_order: float
    error: float

    @property
    def total(self) -> float:
        return self.curvature + self.pairing + self.second_order

    def to_json(self) -> dict:
        return {"curvature": self.curvature, "pairing": self.pairing,
                "second_order": self.second_order, "total": self.total, "error": self.error}


def _euler_bracket(V: FieldOnHalfSpace, F: QTJet, q: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``x . grad V + g V`` divided by ``h`` for quadratic fields."""
    g = (V.N - 2) / 2
    base = 2 * q * F.q + t * F.t + g * F.v
    return base + 2 * F.v if V.symmetry == "quadratic" else base


def f_form(V1: FieldOnHalfSpace, V2: FieldOnHalfSpace, c: CorrectionParams,
           rho_over_eps: float, *, rel_tol: float = 1e-10) -> FFormResult:
    """Reduced bilinear form on the half-ball of radius ``rho_over_eps`` (may be ``inf``).

    The first factor is ``-k eps^2 |pi|^2 V1 - 2 eps pi_ij x_N d_ij V1 -
    eps^2 (2|pi|^2/n) x_N^2 Delta_xbar V1`` with ``k = (N-2)/(4(N-1))``: the
    scalar curvature ``-|pi|^2`` and the metric to second order with its
    tangential ``x_N^2`` block replaced by its isotropic trace part.  The
    second factor is ``x . grad V2 + ((N-2)/2) V2``.

    Supported classes: (radial, radial), (radial, quadratic) and
    (quadratic, radial).  The quadratic-quadratic pairing is of higher order.
    """
    N, n = c.N, c.n
    if V1.N != N or V2.N != N:
        raise ValueError("field dimension differs from the correction parameters")
    classes = (V1.symmetry, V2.symmetry)
    if classes not in {("radial", "radial"), ("radial", "quadratic"), ("quadratic", "radial")}:
        raise ValueError(f"unsupported symmetry classes {classes}")
    for V in (V1, V2):
        if V.symmetry == "quadratic" and not np.allclose(V.pi.as_array(), c.pi_array):
            raise ValueError("quadratic field built from a different pi")
    eps = c.eps
    pi_sq = float(c.pi.norm_sq())
    if pi_sq == 0:
        return FFormResult(0.0, 0.0, 0.0, 0.0)
    k = (N - 2) / (4 * (N - 1))
    c4 = 2 / (n * (n + 2))
    area = _tangential_area(N)

    def pieces(rr, th):
        r = rr * np.sin(th)
        t = rr * np.cos(th)
        q = r * r
        F1, F2 = V1.jet(q, t), V2.jet(q, t)
        D2 = _euler_bracket(V2, F2, q, t)
        zero = np.zeros_like(q)
        if classes == ("radial", "radial"):
            curv = -k * eps**2 * pi_sq * F1.v * D2
            second = -eps**2 * (2 * pi_sq / n) * t * t * (2 * n * F1.q + 4 * q * F1.qq) * D2
            return curv, zero, second
        if classes == ("radial", "quadratic"):
            pair = -8 * eps * pi_sq * c4 * t * F1.qq * q * q * D2
            return zero, pair, zero
        pair = -2 * eps * pi_sq * t * (2 * F1.v + (8 / n) * q * F1.q + 4 * c4 * q * q * F1.qq) * D2
        return zero, pair, zero

    R = float(rho_over_eps)
    top = min(R, 1e6)
    bps = tuple(np.geomspace(1.0, top, max(2, int(math.log10(max(top, 10))) * 3))[1:]) if top > 1 else ()
    bps = tuple(b for b in bps if b < R)
    out, err = [], 0.0
    for idx in range(3):
        def g(rr, th, idx=idx):
            return rr ** (N - 1) * np.sin(th) ** (n - 1) * pieces(rr, th)[idx]
        probe = pieces(np.array([0.5, 2.0]), np.array([0.7, 0.7]))[idx]
        if not np.any(probe):
            out.append(0.0)
            continue
        res = Q.adaptive_2d(g, (0.0, R), (0.0, np.pi / 2), abs_tol=1e-15, rel_tol=rel_tol,
                            x_breakpoints=bps)
        out.append(area * res.value)
        err += area * res.error
    return FFormResult(out[0], out[1], out[2], err)


# --------------------------------------------------------------------------
# mass flux

@dataclass(frozen=True)
class MassFluxReport:
    """``I = G_part - A_part`` on the cap of radius ``rho``.

    ``A_coefficients[d]`` multiplies ``rho^(d+2-N) |S^(N-2)|`` and comes from
    the degree-``d`` part of the metric deviation.
    """

    rho: float
    G_part: float
    A_part: float
    A_coefficients: dict[int, ExactScalar | float]
    G_error: float

    @property
    def I(self) -> float:
        return self.G_part - self.A_part

    def to_json(self) -> dict:
        coeffs = {str(d): (v.to_json() if isinstance(v, ExactScalar) else v)
                  for d, v in sorted(self.A_coefficients.items())}
        return {"rho": self.rho, "G_part": self.G_part, "A_part": self.A_part,
                "I": self.I, "A_coefficients": coeffs, "G_error": self.G_error}


def _by_degree(p: Poly) -> dict[int, Poly]:
    out: dict[int, Poly] = {}
    for e, c in p.items():
        out.setdefault(sum(e), {})[e] = c
    return out


def mass_flux_a_part(jet: MetricJet) -> dict[int, ExactScalar | float]:
    """Exact coefficients of the metric flux ``int (rho^(3-2N) x_a d_b A_ab - 2N rho^(1-2N) x_a x_b A_ab)``.

    Returned per degree ``d`` of ``A``; the integral over the cap of radius
    ``rho`` is ``sum_d coeff_d rho^(d+2-N)`` in units of ``|S^(N-2)|``.
    """
    N = jet.dim
    polys = metric_jet_polynomials(jet)
    div: Poly = {}
    quad: Poly = {}
    for (i, j), p in polys.items():
        pairs = [(i, j)] if i == j else [(i, j), (j, i)]
        for a, b in pairs:
            for e, coef in poly_times_var(poly_derivative(p, b), a).items():
                _padd(div, e, coef)
            for e, coef in poly_times_var(poly_times_var(p, a), b).items():
                _padd(quad, e, coef)
    div_deg, quad_deg = _by_degree(div), _by_degree(quad)
    degrees = sorted({d for d in div_deg} | {d - 2 for d in quad_deg})
    out: dict[int, ExactScalar | float] = {}
    for d in degrees:
        first = hemisphere_integral(div_deg.get(d, {}), N)
        second = hemisphere_integral(quad_deg.get(d + 2, {}), N)
        if isinstance(first, ExactScalar) and isinstance(second, ExactScalar):
            val = first - second * (2 * N)
            if not val.is_zero():
                out[d] = val
        else:
            # floating hemisphere integrals carry the area factor already
            val = (float(first) - 2 * N * float(second)) / _tangential_area(N)
            if val != 0.0:
                out[d] = val
    return out


def _g_part(phi: FieldOnHalfSpace | None, rho: float, N: int, tol: float, order: int) -> tuple[float, float]:
    if phi is None or phi.symmetry == "quadratic":
        # the flux is linear in phi; h averages to zero on every tangential sphere
        return 0.0, 0.0
    pref = 4 * (N - 1) / (N - 2)
    base = rho ** (2 - N)
    dbase = (2 - N) * rho ** (1 - N)
    if phi.symmetry == "radial":
        n = N - 1

        def g(th):
            q, t = (rho * np.sin(th)) ** 2, rho * np.cos(th)
            F = phi.jet(q, t)
            d_r = (2 * q * F.q + t * F.t) / rho
            return base * d_r - dbase * F.v
        r = _theta_integral(g, n, tol)
        scale = pref * _tangential_area(N) * rho ** (N - 1)
        return scale * r.value, scale * r.error

    def run(m):
        y, w = sphere_rule(N - 1, m, hemisphere=True)
        v, grad = phi.value_grad(rho * y)
        d_r = np.einsum("...a,...a->...", grad, y)
        return pref * rho ** (N - 1) * float(w @ (base * d_r - dbase * v))

    fine = run(order)
    return fine, abs(fine - run(max(4, (2 * order) // 3)))


def mass_flux(jet: MetricJet | None, G_expansion: FieldOnHalfSpace | None, rho: float,
              N: int | None = None, *, tol: float = 1e-12, order: int = 24) -> MassFluxReport:
    """Mass flux integral for ``G = |x|^(2-N) + phi`` and the metric jet.

    The Green's-function part runs over the cap by quadrature (``phi`` may be
    None); the metric part is exact.
    """
    if N is None:
        if jet is not None:
            N = jet.dim
        elif G_expansion is not None:
            N = G_expansion.N
        else:
            raise ValueError("cannot infer N")
    if jet is not None and jet.dim != N:
        raise ValueError("jet dimension differs from N")
    coeffs = mass_flux_a_part(jet) if jet is not None else {}
    area = _tangential_area(N)
    a_val = sum(float(v) * rho ** (d + 2 - N) for d, v in coeffs.items()) * area
    g_val, g_err = _g_part(G_expansion, rho, N, tol, order)
    return MassFluxReport(float(rho), g_val, a_val, coeffs, g_err)


def mass_flux_coefficient(N: int) -> Fraction:
    """Closed form ``2(N-3)/((N-1)(N+1)(N+3))`` of the second-derivative flux."""
    return Fraction(2 * (N - 3), (N - 1) * (N + 1) * (N + 3))


def unit_second_derivative_jet(N: int) -> MetricJet:
    """Jet whose only entries are ``II_{01,01}`` and its symmetric copies, with ``pi_{ij,ij} = 1``."""
    n = N - 1
    dd = np.zeros((n,) * 4, dtype=object)
    dd[:] = Fraction(0)
    for idx in ((0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0)):
        dd[idx] = Fraction(1, 2)
    return MetricJet(n, ddII=dd, conformal_normalized=True)


@dataclass(frozen=True)
class MassRelation:
    """``m0 = slope_P * lim P' + slope_pi * |S^3| * pi_{ij,ij}``.

    The inverse direction is ``P' = flux_coefficient * I + pi_trace_coefficient * |S^3| * pi_{ij,ij}``.
    """

    N: int
    m0: float
    slope_P: Fraction
    slope_pi: Fraction
    flux_coefficient: Fraction
    pi_trace_coefficient: Fraction


def p_prime_mass_relation(N: int, pi_second_trace: float, P_prime_limit: float) -> MassRelation:
    """Mass from the limiting ``P'`` and the second-derivative trace.

    ``P' = -k (I + A-flux)`` with ``k = (N-2)^2/(8(N-1))``.  The metric flux is
    ``rho^(5-N)`` times the exact coefficient from :func:`mass_flux_a_part`,
    which survives the limit only for ``N = 5``.
    """
    if N not in (4, 5):
        raise ValueError("the mass relation is defined for N in {4, 5}")
    k = Fraction((N - 2) ** 2, 8 * (N - 1))
    coeff = mass_flux_a_part(unit_second_derivative_jet(N)).get(3, ExactScalar())
    flux = coeff.rat if N == 5 else Fraction(0)
    slope_P = -1 / k
    slope_pi = -flux
    area = float(sphere_area(3))
    m0 = float(slope_P) * P_prime_limit + float(slope_pi) * area * pi_second_trace
    return MassRelation(N, m0, slope_P, slope_pi, -k, -k * flux)
