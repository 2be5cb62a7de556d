"""Exact expansion coefficients on the half-space.

Every integrand here is a finite sum of terms

    coeff * r^p * t^a * (t+1)^k * s^(-m),    s = r^2 + (t+1)^2,

integrated against ``r^(n-1) dr dt`` after the tangential angular average
has been taken.  Scaling ``r = (t+1) rho`` splits each term into
``R(p+n-1, m) * A(a, 2m-k-p-n)`` (see :mod:`bdyamabe.quadrature`).  Boundary
integrands are the same terms at ``t = 0`` with ``S = r^2 + 1``.

Coefficients are stored in units of ``|S^(n-1)|``; parameters ``a1, a2,
delta`` are kept symbolic as monomial exponents.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import corrections as C
from . import quadrature as Q
from .bubble import bubble_jet
from .corrections import laplacian_power_coefficient
from .scalars import AsymptoticValue, ExactScalar, RepresentabilityError, sphere_area
from .tensors import moment

__all__ = [
    "CoefficientResult",
    "CrossPolynomial",
    "DeltaGain",
    "ExpansionPolynomial",
    "IndefiniteQuadraticError",
    "Maximum",
    "Term",
    "boundary_integral",
    "bulk_integral",
    "cross_polynomial",
    "cross_polynomial_numeric",
    "delta_gain",
    "fww_coefficient",
    "maximize",
    "second_order_log_coefficient",
    "second_order_log_pieces",
    "total_polynomial",
]

Mono = tuple[int, int, int]  # exponents of (a1, a2, delta)
ONE: Mono = (0, 0, 0)
_MONO_NAMES = {(0, 0, 0): "1", (1, 0, 0): "a1", (2, 0, 0): "a1^2",
               (0, 1, 0): "a2", (1, 1, 0): "a1a2", (0, 2, 0): "a2^2"}
_NAME_MONOS = {v: k for k, v in _MONO_NAMES.items()}


# --------------------------------------------------------------------------
# term algebra

@dataclass(frozen=True)
class Term:
    coeff: Fraction
    r: int = 0
    t: int = 0
    u: int = 0  # power of (t + 1)
    m: Fraction = Fraction(0)  # s^(-m)
    mono: Mono = ONE

    def __mul__(self, o: Term) -> Term:
        return Term(self.coeff * o.coeff, self.r + o.r, self.t + o.t, self.u + o.u,
                    self.m + o.m, tuple(x + y for x, y in zip(self.mono, o.mono)))

    def scaled(self, c: Fraction) -> Term:
        return Term(self.coeff * c, self.r, self.t, self.u, self.m, self.mono)

    def shift(self, r: int = 0, t: int = 0, u: int = 0, m: Fraction = Fraction(0)) -> Term:
        return Term(self.coeff, self.r + r, self.t + t, self.u + u, self.m + m, self.mono)


Expr = list[Term]


def _T(coeff, r=0, t=0, u=0, m=0, mono: Mono = ONE) -> Term:
    return Term(Fraction(coeff), r, t, u, Fraction(m), mono)


def mul(a: Expr, b: Expr) -> Expr:
    return [x * y for x in a for y in b]


def scale(a: Expr, c) -> Expr:
    return [x.scaled(Fraction(c)) for x in a]


@dataclass(frozen=True)
class IntegralValue:
    """Integral split into convergent part and coefficient of ``log R``.

    When ``log`` is non-zero the finite part depends on the cutoff geometry
    and is meaningless; only ``log`` is reported in that case.
    """

    finite: ExactScalar = field(default_factory=ExactScalar)
    log: ExactScalar = field(default_factory=ExactScalar)

    def __add__(self, o: IntegralValue) -> IntegralValue:
        return IntegralValue(self.finite + o.finite, self.log + o.log)

    def scale(self, c) -> IntegralValue:
        return IntegralValue(self.finite * c, self.log * c)


def _radial(p: int, m: Fraction) -> IntegralValue:
    if 2 * m - p == 1:
        return IntegralValue(log=ExactScalar(1))
    return IntegralValue(finite=Q.radial_closed(p, m))


def bulk_integral(expr: Iterable[Term], n: int) -> dict[Mono, IntegralValue]:
    """``int_0^inf int_0^inf (...) r^(n-1) dr dt`` per parameter monomial."""
    out: dict[Mono, IntegralValue] = defaultdict(IntegralValue)
    for term in expr:
        if term.coeff == 0:
            continue
        b = 2 * term.m - term.u - term.r - n
        if b.denominator != 1:
            raise ValueError(f"non-integer axial exponent for {term}")
        rad = Q.radial_closed(term.r + n - 1, term.m)
        ax = Q.axial_closed(term.t, int(b))
        if isinstance(ax, AsymptoticValue):
            piece = IntegralValue(log=rad * ax.log_coeff)
        else:
            piece = IntegralValue(finite=rad * ax)
        out[term.mono] = out[term.mono] + piece.scale(term.coeff)
    return dict(out)


def boundary_integral(expr: Iterable[Term], n: int) -> dict[Mono, IntegralValue]:
    """``int_0^inf (...) r^(n-1) dr`` for terms in ``r`` and ``S = r^2+1`` only."""
    out: dict[Mono, IntegralValue] = defaultdict(IntegralValue)
    for term in expr:
        if term.t or term.u:
            raise ValueError("boundary terms cannot depend on t")
        if term.coeff == 0:
            continue
        out[term.mono] = out[term.mono] + _radial(term.r + n - 1, term.m).scale(term.coeff)
    return dict(out)


def _merge(*parts: Mapping[Mono, IntegralValue]) -> dict[Mono, IntegralValue]:
    out: dict[Mono, IntegralValue] = defaultdict(IntegralValue)
    for part in parts:
        for k, v in part.items():
            out[k] = out[k] + v
    return dict(out)


# profiles -----------------------------------------------------------------

def _gamma(N: int) -> Fraction:
    return Fraction(N - 2, 2)


def _bubble(N: int) -> Expr:
    return [_T(1, m=_gamma(N))]


def _one_minus_r2_t2() -> Expr:
    # 1 - r^2 - t^2 = 2(t+1) - (t+1)^2 - r^2
    return [_T(2, u=1), _T(-1, u=2), _T(-1, r=2)]


def _z0(N: int) -> Expr:
    g = _gamma(N)
    return scale(mul([_T(1, m=g + 1)], _one_minus_r2_t2()), g)


def _tangential_laplacian_bubble(N: int) -> Expr:
    # F = s^-g:  Delta_xbar F = 2n F_q + 4 r^2 F_qq
    g, n = _gamma(N), N - 1
    return [_T(-2 * n * g, m=g + 1), _T(4 * g * (g + 1), r=2, m=g + 2)]


def _hessian_pi_bubble(N: int) -> Expr:
    """``pi_ij d_ij W / h`` (the delta_ij part drops for trace-free pi)."""
    g = _gamma(N)
    return [_T(4 * g * (g + 1), m=g + 2)]


def _phi_profile(N: int) -> Expr:
    g = _gamma(N)
    return [_T(g, t=1, m=Fraction(N, 2)), _T(-g, m=Fraction(N, 2)),
            _T(1, u=1, m=Fraction(N + 4, 2), mono=(1, 0, 0)),
            _T(1, m=Fraction(N + 2, 2), mono=(0, 1, 0))]


def _phi_trace_profile(N: int) -> Expr:
    g = _gamma(N)
    return [_T(-g, m=Fraction(N, 2)), _T(1, m=Fraction(N + 4, 2), mono=(1, 0, 0)),
            _T(1, m=Fraction(N + 2, 2), mono=(0, 1, 0))]


def _q_profile(N: int) -> Expr:
    g = _gamma(N)
    base = Fraction(N, 2)
    return [_T(g, m=base), _T(1, m=base + 2, mono=(1, 0, 0)), _T(-4, m=base + 3, mono=(1, 0, 0)),
            _T(-2, m=base + 2, mono=(0, 1, 0))]


def _phi_delta_profile() -> Expr:
    return [_T(1, t=1, m=2), _T(-1, m=2), _T(1, m=Fraction(3, 2), mono=(0, 0, 1))]


def _phi_delta_trace() -> Expr:
    return [_T(-1, m=2), _T(1, m=Fraction(3, 2), mono=(0, 0, 1))]


def _q_delta_profile() -> Expr:
    return [_T(1, m=2), _T(1, m=Fraction(5, 2), mono=(0, 0, 1))]


def _quartic_average(n: int) -> Fraction:
    """``<h^2> / (|pi|^2 r^4)`` over the unit sphere of R^n, from the moments."""
    alpha = (2, 2) + (0,) * (n - 2)
    pairs = moment(alpha).in_units_of_sphere(n - 1).rat
    return 2 * pairs


# --------------------------------------------------------------------------
# polynomials

@dataclass(frozen=True)
class ExpansionPolynomial:
    """``c0 + c1 a1 + c11 a1^2 + c2 a2 + c12 a1 a2 + c22 a2^2`` in units of ``|S^(N-2)|``.

    ``order`` names the asymptotic order the coefficients multiply:
    ``"eps2"`` (times eps^2 |pi|^2), ``"eps2_log"`` (times eps^2 log(R) |pi|^2)
    or ``"eps3_log"``.
    """

    N: int
    coefficients: Mapping[str, ExactScalar]
    order: str = "eps2"

    def __post_init__(self) -> None:
        coeffs = {name: ExactScalar.coerce(self.coefficients.get(name, ExactScalar()))
                  for name in _NAME_MONOS}
        extra = set(self.coefficients) - set(_NAME_MONOS)
        if extra:
            raise ValueError(f"unknown monomials {sorted(extra)}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def unit_sphere(self) -> int:
        return self.N - 2

    def __getitem__(self, name: str) -> ExactScalar:
        return self.coefficients[name]

    def __add__(self, o: ExpansionPolynomial) -> ExpansionPolynomial:
        if (self.N, self.order) != (o.N, o.order):
            raise ValueError("polynomials of different dimension or order")
        return ExpansionPolynomial(self.N, {k: self[k] + o[k] for k in _NAME_MONOS}, self.order)

    def evaluate(self, a1, a2) -> ExactScalar:
        a1, a2 = Fraction(a1), Fraction(a2)
        vals = {"1": 1, "a1": a1, "a1^2": a1 * a1, "a2": a2, "a1a2": a1 * a2, "a2^2": a2 * a2}
        return sum((self[k] * Fraction(v) for k, v in vals.items()), ExactScalar())

    def evaluate_float(self, a1: float, a2: float) -> float:
        vals = {"1": 1.0, "a1": a1, "a1^2": a1 * a1, "a2": a2, "a1a2": a1 * a2, "a2^2": a2 * a2}
        return sum(float(self[k]) * v for k, v in vals.items())

    def to_json(self) -> dict:
        return {"N": self.N, "order": self.order, "unit": f"|S^{self.unit_sphere}|",
                "coefficients": {k: v.to_json() for k, v in self.coefficients.items()}}

    def __str__(self) -> str:
        parts = [f"({self[k]})*{k}" if k != "1" else f"({self[k]})" for k in _NAME_MONOS
                 if not self[k].is_zero()]
        return (" + ".join(parts) or "0") + f"  [x |S^{self.unit_sphere}|]"

    @classmethod
    def from_monos(cls, N: int, values: Mapping[Mono, ExactScalar], order: str = "eps2") -> ExpansionPolynomial:
        coeffs = {}
        for mono, v in values.items():
            if v.is_zero():
                continue
            if mono not in _MONO_NAMES:
                raise ValueError(f"monomial {mono} outside the quadratic (a1, a2) family")
            coeffs[_MONO_NAMES[mono]] = v
        return cls(N, coeffs, order)


def _finite_only(values: Mapping[Mono, IntegralValue], what: str) -> dict[Mono, ExactScalar]:
    bad = [m for m, v in values.items() if not v.log.is_zero()]
    if bad:
        raise ArithmeticError(f"{what} has log-divergent coefficients for {bad}")
    return {m: v.finite for m, v in values.items()}


@dataclass(frozen=True)
class CoefficientResult:
    """A single coefficient in units of ``|S^unit_sphere|`` with its order tag."""

    value: ExactScalar
    order: str
    unit_sphere: int
    detail: Mapping[str, ExactScalar] = field(default_factory=dict)


def _ww_pieces(N: int) -> tuple[IntegralValue, IntegralValue]:
    n = N - 1
    w_z = bulk_integral(mul(_bubble(N), _z0(N)), n)[ONE]
    lap = mul(mul([_T(1, t=2)], _tangential_laplacian_bubble(N)), _z0(N))
    t2_z = bulk_integral(lap, n)[ONE]
    return w_z, t2_z


def fww_coefficient(N: int) -> CoefficientResult:
    """Leading coefficient of ``F(W, W)`` per ``eps^2 |pi|^2``.

    The second-order metric contributes ``-c int W Z0 - (2/n) int t^2
    Delta_xbar W Z0`` with ``c = (N-2)/(4(N-1))``.  For ``N = 4`` both
    integrals grow like ``log R`` and the log coefficient is returned.
    For ``N = 5`` the gradient form ``-(1/8) int t^2 |grad_xbar W|^2`` is
    computed as a second route and must agree.
    """
    if N not in (4, 5, 6):
        raise ValueError("fww_coefficient is defined for N in {4, 5, 6}")
    n = N - 1
    c = Fraction(N - 2, 4 * (N - 1))
    w_z, t2_z = _ww_pieces(N)
    total = w_z.scale(-c) + t2_z.scale(Fraction(-2, n))
    detail = {"int_W_Z0": w_z.log if N == 4 else w_z.finite,
              "int_t2_lapW_Z0": t2_z.log if N == 4 else t2_z.finite}
    if N == 4:
        return CoefficientResult(total.log, "eps2_log", n - 1, detail)
    if not total.log.is_zero():
        raise ArithmeticError("unexpected log growth")
    if N == 5:
        g = _gamma(N)
        grad_sq = [_T(4 * g * g, r=2, t=2, m=2 * g + 2)]
        gradient_route = bulk_integral(grad_sq, n)[ONE].finite * Fraction(-1, 8)
        detail = {**detail, "gradient_route": gradient_route,
                  "radial_R(5,5)": Q.radial_closed(5, 5), "axial_A(2,4)": ExactScalar.coerce(Q.axial_closed(2, 4))}
    return CoefficientResult(total.finite, "eps2", n - 1, detail)


@dataclass(frozen=True)
class CrossPolynomial:
    bulk: ExpansionPolynomial
    boundary: ExpansionPolynomial
    intermediate: Mapping[str, Fraction]

    @property
    def total(self) -> ExpansionPolynomial:
        return self.bulk + self.boundary


def cross_polynomial(N: int) -> CrossPolynomial:
    """Lower-bound polynomial for ``F(W, Psi) + F(Psi, W)`` per ``eps^2 |pi|^2``.

    bulk:      ``2 int t (pi_ij d_ij W) Phi / eps``
    boundary:  ``int q Phi / eps^2`` over ``x_N = 0``
    """
    if N == 4:
        raise ValueError("N = 4 is logarithmic; use delta_gain")
    if N not in (5, 6):
        raise ValueError("cross_polynomial is defined for N in {5, 6}")
    n = N - 1
    quartic = _quartic_average(n)
    hess = _hessian_pi_bubble(N)
    bulk_expr = scale(mul(mul([_T(1, r=4, t=1)], hess), _phi_profile(N)), 2 * quartic)
    bulk = _finite_only(bulk_integral(bulk_expr, n), "bulk")
    bdy_expr = scale(mul(mul([_T(1, r=4)], _q_profile(N)), _phi_trace_profile(N)), quartic)
    bdy = _finite_only(boundary_integral(bdy_expr, n), "boundary")
    hess_coeff = hess[0].coeff
    intermediate = {
        "bulk_prefactor": 2 * hess_coeff,
        "leading_term_factor": 2 * hess_coeff * quartic * _gamma(N),
        "parameter_term_factor": 2 * hess_coeff * quartic,
    }
    return CrossPolynomial(ExpansionPolynomial.from_monos(N, bulk),
                           ExpansionPolynomial.from_monos(N, bdy), intermediate)


def total_polynomial(N: int) -> ExpansionPolynomial:
    """``F(W,W) + F(W,Psi) + F(Psi,W)`` lower bound as a polynomial in ``(a1, a2)``."""
    cross = cross_polynomial(N).total
    fww = fww_coefficient(N)
    return cross + ExpansionPolynomial(N, {"1": fww.value})


# --------------------------------------------------------------------------
# maximization

class IndefiniteQuadraticError(ValueError):
    """The quadratic part is not negative definite."""


@dataclass(frozen=True)
class Maximum:
    a1: Fraction
    a2: Fraction
    value: ExactScalar
    hessian: tuple[tuple[ExactScalar, ExactScalar], tuple[ExactScalar, ExactScalar]]


def _common_unit(values: Iterable[ExactScalar]) -> tuple[str, list[Fraction]]:
    vals = list(values)
    if all(v.pi_coeff == 0 for v in vals):
        return "rat", [v.rat for v in vals]
    if all(v.rat == 0 for v in vals):
        return "pi", [v.pi_coeff for v in vals]
    raise RepresentabilityError("quadratic coefficients mix rational and pi parts")


def maximize(poly: ExpansionPolynomial) -> Maximum:
    """Exact critical point of a negative-definite quadratic in ``(a1, a2)``."""
    unit, (c1, c11, c2, c12, c22) = _common_unit(
        poly[k] for k in ("a1", "a1^2", "a2", "a1a2", "a2^2"))
    # Hessian [[2 c11, c12], [c12, 2 c22]]
    h11, h12, h22 = 2 * c11, c12, 2 * c22
    det = h11 * h22 - h12 * h12
    if det == 0:
        raise IndefiniteQuadraticError("quadratic part is singular")
    if not (h11 < 0 and det > 0):
        raise IndefiniteQuadraticError(
            f"quadratic part is not negative definite (h11={h11}, det={det})")
    a1 = (-c1 * h22 + c2 * h12) / det
    a2 = (-c2 * h11 + c1 * h12) / det
    wrap = ExactScalar.pi if unit == "pi" else ExactScalar.coerce
    hess = ((wrap(h11), wrap(h12)), (wrap(h12), wrap(h22)))
    return Maximum(a1, a2, poly.evaluate(a1, a2), hess)


# --------------------------------------------------------------------------
# N = 4 delta gain

@dataclass(frozen=True)
class DeltaGain:
    """Linear-in-delta log coefficient of the N = 4 lower bound, units ``|S^2|``.

    ``pieces`` use the source sign that follows from the Laplacian of the
    delta term; ``positive_source_pieces`` take that source with the opposite
    (positive) sign.
    """

    pieces: Mapping[str, ExactScalar]
    positive_source_pieces: Mapping[str, ExactScalar]
    source_coefficient: Fraction
    pi_part: ExactScalar

    @property
    def total(self) -> ExactScalar:
        return sum(self.pieces.values(), ExactScalar())

    @property
    def positive_source_total(self) -> ExactScalar:
        return sum(self.positive_source_pieces.values(), ExactScalar())


def delta_gain(N: int = 4) -> DeltaGain:
    if N != 4:
        raise ValueError("delta_gain is only defined for N = 4")
    n = 3
    quartic = _quartic_average(n)
    delta: Mono = (0, 0, 1)
    bulk = bulk_integral(
        scale(mul(mul([_T(1, r=4, t=1)], _hessian_pi_bubble(N)), _phi_delta_profile()), 2 * quartic), n)
    # -Delta Xi_delta carries  Delta(delta h s^(-3/2)) = coeff * delta h s^(-5/2)
    coeff = laplacian_power_coefficient(N, Fraction(-3, 2))
    pairing = bulk_integral(scale(mul([_T(1, r=4, m=Fraction(5, 2), mono=delta)], _phi_delta_profile()),
                                  quartic), n)
    bdy = boundary_integral(
        scale(mul(mul([_T(1, r=4)], _q_delta_profile()), _phi_delta_trace()), quartic), n)
    fww = fww_coefficient(4).value
    pi_part = bulk.get(ONE, IntegralValue()).log + fww
    pairing_log = pairing.get(delta, IntegralValue()).log
    common = {"bulk": bulk.get(delta, IntegralValue()).log,
              "boundary": bdy.get(delta, IntegralValue()).log}
    return DeltaGain(
        pieces={**common, "source": pairing_log * coeff},
        positive_source_pieces={**common, "source": pairing_log * abs(coeff)},
        source_coefficient=coeff,
        pi_part=pi_part,
    )


# --------------------------------------------------------------------------
# N = 5 second-order log coefficient

def second_order_log_pieces(N: int = 5) -> dict[str, Fraction]:
    """Prefactors and log coefficients of the two eps^3 integrals, per ``pi_{ij,ij}``.

    ``-pi_{ij,kl} int t x_k x_l d_ij W Z0``: only the ``x_i x_j`` part of the
    Hessian survives the trace-free contraction, and the fourth moment pairs
    ``(ij)`` with ``(kl)`` twice.  ``-2 pi_{ij,ik} int t x_k d_j W Z0`` uses
    the second moment.
    """
    if N != 5:
        raise ValueError("second_order_log_coefficient is defined for N = 5")
    n = N - 1
    g = _gamma(N)
    unit = n - 1
    fourth = moment((2, 2) + (0,) * (n - 2)).in_units_of_sphere(unit).rat
    second = moment((2,) + (0,) * (n - 1)).in_units_of_sphere(unit).rat
    hess_xx = 4 * g * (g + 1)  # d_ij s^-g  ->  4 F_qq x_i x_j
    grad = -2 * g              # d_j s^-g   ->  2 F_q x_j
    pref_quartic = -hess_xx * 2 * fourth * g
    pref_quadratic = -2 * grad * second * g
    z_shape = _one_minus_r2_t2()
    quartic_int = bulk_integral(mul([_T(1, r=4, t=1, m=2 * g + 3)], z_shape), n)[ONE]
    quadratic_int = bulk_integral(mul([_T(1, r=2, t=1, m=2 * g + 2)], z_shape), n)[ONE]
    return {
        "prefactor_quartic": pref_quartic,
        "prefactor_quadratic": pref_quadratic,
        "log_quartic": quartic_int.log.rat,
        "log_quadratic": quadratic_int.log.rat,
    }


def second_order_log_coefficient(N: int = 5, pi_second_trace=1) -> ExactScalar:
    """Coefficient of ``eps^3 log(R)`` in ``F(W, W)`` in units of ``|S^3|``.

    ``pi_second_trace`` is the contraction ``pi_{ij,ij}``; the default 1
    returns the coefficient itself.
    """
    p = second_order_log_pieces(N)
    value = p["prefactor_quartic"] * p["log_quartic"] + p["prefactor_quadratic"] * p["log_quadratic"]
    return ExactScalar(value * Fraction(pi_second_trace))


# --------------------------------------------------------------------------
# numerical cross-check

def cross_polynomial_numeric(N: int, a1: float, a2: float, tol: float = 1e-11) -> dict[str, float]:
    """Bulk and boundary pieces by adaptive quadrature of the original profiles.

    Evaluates the correction and bubble profiles pointwise (no term
    expansion) and integrates in ``(r, t)``; units of ``|S^(N-2)|``.
    """
    if N not in (5, 6):
        raise ValueError("numeric cross-check is defined for N in {5, 6}")
    n = N - 1
    quartic = float(_quartic_average(n))

    def bulk_f(r, t):
        r = np.asarray(r, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), r.shape)
        q = r * r
        hess_pi = 4 * bubble_jet(N, q, t).qq
        phi = C.phi_jet(N, a1, a2, q, t).v
        return 2 * t * hess_pi * phi * quartic * r**4 * r ** (n - 1)

    def bdy_f(r):
        r = np.asarray(r, dtype=float)
        q = r * r
        phi0 = C.phi_jet(N, a1, a2, q, np.zeros_like(q)).v
        return C.q_profile(N, a1, a2, q) * phi0 * quartic * r**4 * r ** (n - 1)

    inner = lambda t: Q.adaptive(lambda r: bulk_f(r, t), 0.0, math.inf, abs_tol=tol * 1e-2, rel_tol=1e-12).value
    bulk = Q.adaptive(np.vectorize(inner), 0.0, math.inf, abs_tol=tol, rel_tol=1e-11).value
    bdy = Q.adaptive(bdy_f, 0.0, math.inf, abs_tol=tol, rel_tol=1e-12).value
    return {"bulk": bulk, "boundary": bdy, "total": bulk + bdy}


def in_sphere_units(value: ExactScalar, unit_sphere: int) -> float:
    return float(value) * float(sphere_area(unit_sphere))
