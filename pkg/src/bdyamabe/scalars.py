"""Exact arithmetic over rationals extended by a single power of pi.

Every closed-form constant produced by the toolkit lives in the set
``q0 + q1*pi`` with rational ``q0`` and ``q1``.  Sphere areas carry higher
powers of pi, so they are kept as :class:`PiMonomial` units and never
multiplied into an :class:`ExactScalar`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

Rational = int | Fraction

__all__ = [
    "AsymptoticValue",
    "ExactScalar",
    "PiMonomial",
    "RepresentabilityError",
    "exact_add",
    "exact_scale",
    "sphere_area",
]


class RepresentabilityError(ArithmeticError):
    """Raised when a result would need pi squared or higher."""


def _as_fraction(value: Rational | str) -> Fraction:
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction, str)):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


_SCALAR_RE = re.compile(r"^\s*(-?\d+(?:/\d+)?)\s*\+\s*(-?\d+(?:/\d+)?)\s*\*\s*pi\s*$")


@dataclass(frozen=True)
class ExactScalar:
    """The value ``rat + pi_coeff * pi`` with arbitrary-precision parts."""

    rat: Fraction = Fraction(0)
    pi_coeff: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rat", _as_fraction(self.rat))
        object.__setattr__(self, "pi_coeff", _as_fraction(self.pi_coeff))

    @classmethod
    def of(cls, rat: Rational | str = 0, pi: Rational | str = 0) -> ExactScalar:
        return cls(_as_fraction(rat), _as_fraction(pi))

    @classmethod
    def pi(cls, coeff: Rational | str = 1) -> ExactScalar:
        return cls(Fraction(0), _as_fraction(coeff))

    @classmethod
    def coerce(cls, value: ExactScalar | Rational) -> ExactScalar:
        if isinstance(value, ExactScalar):
            return value
        return cls(_as_fraction(value), Fraction(0))

    @property
    def is_rational(self) -> bool:
        return self.pi_coeff == 0

    def is_zero(self) -> bool:
        return self.rat == 0 and self.pi_coeff == 0

    def __add__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        o = ExactScalar.coerce(other)
        return ExactScalar(self.rat + o.rat, self.pi_coeff + o.pi_coeff)

    __radd__ = __add__

    def __neg__(self) -> ExactScalar:
        return ExactScalar(-self.rat, -self.pi_coeff)

    def __sub__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        return self + (-ExactScalar.coerce(other))

    def __rsub__(self, other: ExactScalar | Rational) -> ExactScalar:
        return ExactScalar.coerce(other) - self

    def __mul__(self, other: ExactScalar | Rational) -> ExactScalar:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ExactScalar(self.rat * other, self.pi_coeff * other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        if self.pi_coeff != 0 and other.pi_coeff != 0:
            raise RepresentabilityError("product has a pi**2 component")
        return ExactScalar(
            self.rat * other.rat,
            self.rat * other.pi_coeff + self.pi_coeff * other.rat,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Rational) -> ExactScalar:
        if isinstance(other, ExactScalar):
            if not other.is_rational:
                raise RepresentabilityError("division by a value with a pi part")
            other = other.rat
        q = _as_fraction(other)
        return ExactScalar(self.rat / q, self.pi_coeff / q)

    def __float__(self) -> float:
        return float(self.rat) + float(self.pi_coeff) * math.pi

    def __str__(self) -> str:
        return f"{_fmt(self.rat)} + {_fmt(self.pi_coeff)}*pi"

    def __repr__(self) -> str:
        return f"ExactScalar({self})"

    def to_json(self) -> dict[str, str]:
        return {"rat": _fmt(self.rat), "pi": _fmt(self.pi_coeff)}

    @classmethod
    def from_json(cls, payload: dict[str, str]) -> ExactScalar:
        return cls(Fraction(payload["rat"]), Fraction(payload["pi"]))

    @classmethod
    def parse(cls, text: str) -> ExactScalar:
        m = _SCALAR_RE.match(text)
        if m is None:
            raise ValueError(f"not of the form 'p/q + r/s*pi': {text!r}")
        return cls(Fraction(m.group(1)), Fraction(m.group(2)))


def exact_add(a: ExactScalar, b: ExactScalar) -> ExactScalar:
    return a + b


def exact_scale(a: ExactScalar, r: Rational) -> ExactScalar:
    return a * _as_fraction(r)


@dataclass(frozen=True)
class PiMonomial:
    """The value ``coeff * pi**power``; used for sphere areas and moments."""

    coeff: Fraction
    power: int

    @property
    def representable(self) -> bool:
        return self.coeff == 0 or self.power in (0, 1)

    def exact(self) -> ExactScalar:
        if self.coeff == 0:
            return ExactScalar()
        if self.power == 0:
            return ExactScalar(self.coeff)
        if self.power == 1:
            return ExactScalar.pi(self.coeff)
        raise RepresentabilityError(f"pi**{self.power} is outside rationals + rationals*pi")

    def __mul__(self, other: PiMonomial | Rational) -> PiMonomial:
        if isinstance(other, PiMonomial):
            return PiMonomial(self.coeff * other.coeff, self.power + other.power)
        return PiMonomial(self.coeff * _as_fraction(other), self.power)

    __rmul__ = __mul__

    def __truediv__(self, other: PiMonomial | Rational) -> PiMonomial:
        if isinstance(other, PiMonomial):
            return PiMonomial(self.coeff / other.coeff, self.power - other.power)
        return PiMonomial(self.coeff / _as_fraction(other), self.power)

    def __float__(self) -> float:
        return float(self.coeff) * math.pi**self.power

    def __str__(self) -> str:
        return f"{_fmt(self.coeff)}*pi^{self.power}"


def sphere_area(k: int) -> PiMonomial:
    """Surface area of the unit ``k``-sphere in R^(k+1).

    ``|S^k| = 2 pi^((k+1)/2) / Gamma((k+1)/2)`` always reduces to a rational
    times an integer power of pi.  Only ``k`` in {1, 2} lands in the exact
    field; check ``.representable`` before calling ``.exact()``.
    """
    if k < 1:
        raise ValueError("sphere dimension must be at least 1")
    m = k + 1
    if m % 2 == 0:
        # Gamma(m/2) = (m/2 - 1)!
        return PiMonomial(Fraction(2, math.factorial(m // 2 - 1)), m // 2)
    # m odd: Gamma(m/2) = (m-1)! sqrt(pi) / (4**((m-1)/2) ((m-1)/2)!)
    j = (m - 1) // 2
    gamma_rat = Fraction(math.factorial(2 * j), 4**j * math.factorial(j))
    return PiMonomial(2 / gamma_rat, j)


@dataclass(frozen=True)
class AsymptoticValue:
    """A cutoff-dependent value ``log_coeff * log(R) + const_part``.

    ``const_part`` is a float estimate and is trusted only when
    ``const_known`` is set.
    """

    log_coeff: ExactScalar = ExactScalar()
    const_part: float = 0.0
    const_known: bool = False

    @classmethod
    def convergent(cls, value: float, known: bool = True) -> AsymptoticValue:
        return cls(ExactScalar(), float(value), known)

    @property
    def is_convergent(self) -> bool:
        return self.log_coeff.is_zero()

    def __add__(self, other: AsymptoticValue) -> AsymptoticValue:
        if not isinstance(other, AsymptoticValue):
            return NotImplemented
        return AsymptoticValue(
            self.log_coeff + other.log_coeff,
            self.const_part + other.const_part,
            self.const_known and other.const_known,
        )

    def scale(self, r: ExactScalar | Rational) -> AsymptoticValue:
        return AsymptoticValue(
            self.log_coeff * r, self.const_part * float(r), self.const_known
        )

    def at(self, cutoff: float) -> float:
        return float(self.log_coeff) * math.log(cutoff) + self.const_part
