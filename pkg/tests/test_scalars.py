import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdyamabe.scalars import (
    AsymptoticValue,
    ExactScalar,
    RepresentabilityError,
    sphere_area,
)

fractions = st.fractions(max_denominator=10**6).filter(lambda q: abs(q) < 10**9)
scalars = st.builds(ExactScalar.of, fractions, fractions)


def test_string_form():
    assert str(ExactScalar.of(Fraction(-3, 512))) == "-3/512 + 0/1*pi"
    assert str(ExactScalar.pi(Fraction(31, 78400))) == "0/1 + 31/78400*pi"


def test_additive_inverse():
    x = ExactScalar.pi(Fraction(31, 78400))
    assert (x + (-x)).is_zero()


def test_pi_squared_is_not_representable():
    with pytest.raises(RepresentabilityError):
        ExactScalar.pi(1) * ExactScalar.pi(1)


def test_division_by_pi_part_rejected():
    with pytest.raises(RepresentabilityError):
        ExactScalar.of(1) / ExactScalar.pi(1)


@given(scalars)
def test_parse_and_json_round_trip(x):
    assert ExactScalar.parse(str(x)) == x
    assert ExactScalar.from_json(x.to_json()) == x


@given(scalars, scalars, scalars)
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    r = Fraction(3, 7)
    assert (a + b) * r == a * r + b * r


@given(scalars, fractions)
def test_float_is_consistent(a, r):
    assert math.isclose(float(a * r), float(a) * float(r), rel_tol=1e-9, abs_tol=1e-6)


@pytest.mark.parametrize("k, expected", [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi**2),
                                         (4, 8 * math.pi**2 / 3), (5, math.pi**3)])
def test_sphere_area_against_gamma_formula(k, expected):
    oracle = 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)
    assert math.isclose(float(sphere_area(k)), oracle, rel_tol=1e-14)
    assert math.isclose(float(sphere_area(k)), expected, rel_tol=1e-14)


def test_only_low_spheres_are_exact():
    assert sphere_area(1).exact() == ExactScalar.pi(2)
    assert sphere_area(2).exact() == ExactScalar.pi(4)
    assert not sphere_area(3).representable
    with pytest.raises(RepresentabilityError):
        sphere_area(3).exact()


def test_asymptotic_value_arithmetic():
    a = AsymptoticValue(ExactScalar.of(1), 2.0, True)
    b = AsymptoticValue.convergent(0.5)
    s = (a + b).scale(2)
    assert s.log_coeff == ExactScalar.of(2)
    assert math.isclose(s.at(math.e), 2 + 5.0)
    assert b.is_convergent and not a.is_convergent
