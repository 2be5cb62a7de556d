import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import qmc

from bdyamabe.bubble import BubbleParams, eval_W
from bdyamabe.corrections import (
    CorrectionParams,
    appendix_chain,
    chain_params_for,
    chain_residuals,
    delta_source_identity,
    eval_Phi,
    eval_Phi_delta,
    laplacian_power_coefficient,
    phi_interior_residual,
    q_consistency,
    q_delta_consistency,
    reconstruct_phi_from_chain,
)
from bdyamabe.tensors import TraceFreePi


def _points(N, count=100, seed=0):
    x = qmc.Sobol(N, seed=seed).random(count) * 6 - 3
    x[:, -1] = np.abs(x[:, -1])
    return x


def _rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def _params(N, a1=-63 / 4, a2=105 / 8, delta=0.0, seed=0):
    return CorrectionParams(N, 0.1, TraceFreePi.random(N - 1, np.random.default_rng(seed)), a1, a2, delta)


def _fd_laplacian(f, x, h=1e-3):
    out = -2 * x.shape[-1] * f(x)
    for a in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[a] = h
        out = out + f(x + e) + f(x - e)
    return out / h**2


@pytest.mark.parametrize("N", [4, 5, 6, 7])
def test_phi_solves_interior_equation(N):
    lhs, rhs = phi_interior_residual(_params(N), _points(N))
    assert _rel(lhs, rhs) < 1e-10


def test_phi_residual_against_finite_differences():
    c = _params(5)
    x = _points(5, 20, seed=3) + np.array([0, 0, 0, 0, 0.5])
    lap = _fd_laplacian(lambda y: eval_Phi(c, y), x)
    _, rhs = phi_interior_residual(c, x)
    assert _rel(-lap, rhs) < 1e-4


def test_phi_derivative_against_finite_differences():
    c = _params(5, seed=2)
    x = _points(5, 10, seed=5) + np.array([0, 0, 0, 0, 0.5])
    h = 1e-6
    for axis in range(5):
        e = np.zeros(5)
        e[axis] = h
        deriv = tuple(int(a == axis) for a in range(5))
        fd = (eval_Phi(c, x + e) - eval_Phi(c, x - e)) / (2 * h)
        assert np.allclose(eval_Phi(c, x, deriv), fd, atol=1e-8)


@pytest.mark.parametrize("N", [4, 5, 6])
@given(a1=st.floats(-40, 40), a2=st.floats(-40, 40))
def test_q_consistency(N, a1, a2):
    c = _params(N, a1, a2)
    q, op = q_consistency(c, _points(N, 32)[:, :-1])
    assert np.max(np.abs(q - op)) <= 1e-10 * max(1.0, np.max(np.abs(q)))


def test_delta_source_sign():
    """The delta term adds +9 delta eps h s^(-5/2) to -Delta Phi_delta - 2 eps pi_ij x_4 d_ij W."""
    c = _params(4, 0, 0, delta=0.7)
    x = _points(4)
    lhs, magnitude = delta_source_identity(c, x)
    assert _rel(lhs, magnitude) < 1e-10
    # independent route through finite differences of Phi_delta and the bubble Hessian
    xs = x[:12] + np.array([0, 0, 0, 0.5])
    lap = _fd_laplacian(lambda y: eval_Phi_delta(c, y), xs)
    P = c.pi_array
    hess = np.stack([np.stack([eval_W(BubbleParams(4), xs, tuple(int(k in (i, j)) + int(i == j == k) for k in range(4)))
                               for j in range(3)], -1) for i in range(3)], -2)
    source = 2 * c.eps * xs[:, -1] * np.einsum("pij,ij->p", hess, P)
    _, mag = delta_source_identity(c, xs)
    assert _rel(-lap - source, mag) < 1e-4


def test_delta_boundary_consistency():
    c = _params(4, 0, 0, delta=1.3)
    q, op = q_delta_consistency(c, _points(4, 32)[:, :-1])
    assert _rel(op, q) < 1e-10


@pytest.mark.parametrize("N", [5, 6, 7])
def test_appendix_chain(N):
    res = chain_residuals(N, 0.3, -1.7, _points(N))
    for name, (lhs, rhs) in res.items():
        assert _rel(lhs, rhs) < 1e-10, name


@pytest.mark.parametrize("N", [5, 6])
def test_chain_reconstructs_phi(N):
    lhs, phi = reconstruct_phi_from_chain(_params(N), _points(N))
    assert _rel(lhs, phi) < 1e-10


def test_chain_parameter_map_inverts():
    b1, b2 = chain_params_for(5, 70.0, -30.0)
    assert (b1 * 2 * 5 * 7, -b2 * 2 * 5 * 3) == pytest.approx((70.0, -30.0))


def test_chain_branch_errors():
    q = t = np.array([0.5])
    with pytest.raises(ValueError):
        appendix_chain(6, 0, 0, q, t, log_branch=False)
    with pytest.raises(ValueError):
        appendix_chain(5, 0, 0, q, t, log_branch=True)
    with pytest.raises(ValueError):
        appendix_chain(4, 0, 0, q, t)


def test_laplacian_power_coefficient():
    # Delta(h s^(-3/2)) = -9 h s^(-5/2) in four dimensions
    assert laplacian_power_coefficient(4, -1.5) == -9
