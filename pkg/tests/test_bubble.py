import numpy as np
import pytest
from scipy.stats import qmc

from bdyamabe.bubble import (
    BubbleParams,
    eval_W,
    eval_Z,
    kernel_residual,
    residual_bubble,
    robin_weight,
    trace_w,
)


def _points(N, count=64, seed=0, scale=3.0):
    x = qmc.Sobol(N, seed=seed).random(count) * 2 * scale - scale
    x[:, -1] = np.abs(x[:, -1])
    return x


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7])
def test_bubble_solves_interior_and_boundary(N):
    p = BubbleParams(N, lam=1.3, xi=tuple(0.2 * k for k in range(N - 1)))
    lap, bdy = residual_bubble(p, _points(N))
    assert np.max(np.abs(lap)) < 1e-13
    assert np.max(np.abs(bdy)) < 1e-13


def test_origin_values():
    p = BubbleParams(5)
    x0 = np.zeros(5)
    assert eval_W(p, x0) == pytest.approx(1.0)
    assert -eval_W(p, x0, (0, 0, 0, 0, 1)) == pytest.approx(3.0)
    assert trace_w(p, np.zeros(4)) == pytest.approx(1.0)
    assert robin_weight(p, np.zeros(4)) == pytest.approx(1.0)


def test_finite_difference_laplacian_is_second_order():
    p = BubbleParams(5)
    x = _points(5, 8, seed=2) + np.array([0, 0, 0, 0, 0.5])
    e1 = np.max(np.abs(residual_bubble(p, x, fd_step=1e-2)[0]))
    e2 = np.max(np.abs(residual_bubble(p, x, fd_step=5e-3)[0]))
    assert 3.0 < e1 / e2 < 5.0


@pytest.mark.parametrize("N", [4, 5, 6])
def test_kernel_fields_are_parameter_derivatives(N):
    h = 1e-5
    x = _points(N, 16, seed=4)
    p = BubbleParams(N, lam=1.1)
    dlam = (eval_W(BubbleParams(N, lam=1.1 + h), x) - eval_W(BubbleParams(N, lam=1.1 - h), x)) / (2 * h)
    assert np.allclose(eval_Z(p, 0, x), -dlam, atol=1e-8)
    for i in range(1, N):
        xi_p = [0.0] * (N - 1)
        xi_m = [0.0] * (N - 1)
        xi_p[i - 1], xi_m[i - 1] = h, -h
        d = (eval_W(BubbleParams(N, 1.1, tuple(xi_p)), x) - eval_W(BubbleParams(N, 1.1, tuple(xi_m)), x)) / (2 * h)
        assert np.allclose(eval_Z(p, i, x), d, atol=1e-8)


@pytest.mark.parametrize("N", [4, 5, 6])
def test_kernel_fields_satisfy_linearized_boundary_condition(N):
    p = BubbleParams(N)
    xbar = _points(N, 32)[:, :-1]
    for index in range(N):
        assert np.max(np.abs(kernel_residual(p, index, xbar))) < 1e-13


def test_invalid_parameters():
    with pytest.raises(ValueError):
        BubbleParams(2)
    with pytest.raises(ValueError):
        BubbleParams(4, lam=0.0)
    with pytest.raises(ValueError):
        eval_W(BubbleParams(4), np.zeros(3))
