import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from bdyamabe import quadrature as Q
from bdyamabe.scalars import AsymptoticValue


def _scipy(f, a, b, points=None):
    v, _ = integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500, points=points)
    return v


@given(st.integers(0, 8), st.integers(1, 14))
def test_radial_closed_against_beta_function(p, twice_q):
    q = Fraction(twice_q, 2)
    if 2 * q - p <= 1:
        with pytest.raises(Q.DivergentIntegralError):
            Q.radial_closed(p, q)
        return
    a = (p + 1) / 2
    oracle = special.beta(a, float(q) - a) / 2
    assert math.isclose(float(Q.radial_closed(p, q)), oracle, rel_tol=1e-12)


@pytest.mark.parametrize("p, q", [(0, 1), (3, Fraction(5, 2)), (5, 5), (4, Fraction(9, 2)), (7, 6)])
def test_radial_closed_against_adaptive(p, q):
    f = lambda t: t**p * (t * t + 1) ** (-float(q))
    num = Q.adaptive(f, 0, math.inf, rel_tol=1e-13)
    assert math.isclose(float(Q.radial_closed(p, q)), num.value, rel_tol=1e-10)
    assert math.isclose(num.value, _scipy(f, 0, math.inf), rel_tol=1e-10)


@given(st.integers(0, 6), st.integers(2, 12))
def test_axial_closed_convergent(a, gap):
    b = a + gap
    f = lambda t: t**a * (t + 1.0) ** (-b)
    val = Q.axial_closed(a, b)
    assert math.isclose(float(val), _scipy(f, 0, np.inf), rel_tol=1e-10)


@pytest.mark.parametrize("a", [0, 1, 2, 4])
def test_axial_log_case_constant(a):
    val = Q.axial_closed(a, a + 1)
    assert isinstance(val, AsymptoticValue)
    R = 1e7
    f = lambda t: t**a * (t + 1.0) ** (-(a + 1))
    num = _scipy(f, 0, 1) + _scipy(f, 1, 1e3) + _scipy(f, 1e3, R)
    # tail of the expansion is O(1/R)
    assert abs(val.at(R) - num) < 1e-5
    assert math.isclose(val.const_part, -float(Q.harmonic_number(a)), abs_tol=1e-14)


def test_divergent_parameters_named():
    with pytest.raises(Q.DivergentIntegralError, match="infinity"):
        Q.radial_closed(4, 2)
    with pytest.raises(Q.DivergentIntegralError):
        Q.axial_closed(3, 3)


def test_gamma_half_integer():
    for k in range(1, 12):
        x = Fraction(k, 2)
        c, p = Q.gamma_half_integer(x)
        assert math.isclose(float(c) * math.sqrt(math.pi) ** p, math.gamma(k / 2), rel_tol=1e-14)


@given(st.floats(0.1, 5.0), st.floats(0.5, 4.0))
def test_adaptive_matches_scipy(scale, power):
    f = lambda x: np.exp(-scale * x) * np.abs(np.sin(x)) ** power
    kinks = [math.pi * k for k in range(1, 10)]
    ours = Q.adaptive(f, 0.0, 30.0, rel_tol=1e-11, breakpoints=kinks)
    assert math.isclose(ours.value, _scipy(f, 0, 30, points=kinks), rel_tol=1e-9)


def test_adaptive_budget_exhaustion():
    with pytest.raises(Q.QuadratureError):
        Q.adaptive(lambda x: np.sign(np.sin(1 / np.maximum(x, 1e-300))), 0.0, 1.0, max_intervals=20)
    r = Q.adaptive(lambda x: np.sign(np.sin(1 / np.maximum(x, 1e-300))), 0.0, 1.0, max_intervals=20,
                   allow_coarse=True)
    assert not r.converged


def test_adaptive_2d_gaussian():
    r = Q.adaptive_2d(lambda x, y: np.exp(-x * x - y * y), (0, math.inf), (0, math.inf))
    assert math.isclose(r.value, math.pi / 4, rel_tol=1e-10)


def test_log_fit_recovers_synthetic_series():
    R = np.geomspace(1e2, 1e5, 8)
    y = -0.25 * np.log(R) + 1.5 + 3.0 / R
    fit = Q.fit_log_series(R, y, inverse_powers=1)
    assert math.isclose(fit.log_coeff, -0.25, rel_tol=1e-10)
    assert math.isclose(fit.const, 1.5, rel_tol=1e-10)
    assert fit.good_fit
