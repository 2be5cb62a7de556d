"""Explicit correction functions for the linearized boundary problem.

All corrections have the form ``eps * h(x_bar) * F(q, t)`` with
``h = pi_ij x_i x_j``, ``q = |x_bar|^2``, ``t = x_N`` and
``s = q + (t+1)^2``:

* ``Phi``       F = g (t-1) s^(-N/2) + a1 (t+1) s^(-(N+4)/2) + a2 s^(-(N+2)/2)
* ``Phi_delta`` F = (t-1) s^(-2) + delta s^(-3/2)                     (N = 4)

plus the radial building blocks ``Phi_0, Phi_1, Phi_2`` whose difference
``Phi_1 - Phi_2`` solves ``-Delta u = x_N W``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bubble
from ._jets import QTJet, lift_quadratic, lift_radial, quadratic_form
from .tensors import TraceFreePi

__all__ = [
    "ChainValues",
    "CorrectionParams",
    "appendix_chain",
    "chain_params_for",
    "chain_residuals",
    "delta_source_identity",
    "eval_Phi",
    "eval_Phi_delta",
    "eval_q",
    "eval_q_delta",
    "laplacian_power_coefficient",
    "phi_delta_jet",
    "phi_interior_residual",
    "phi_jet",
    "q_consistency",
    "q_delta_consistency",
    "q_delta_profile",
    "q_profile",
    "reconstruct_phi_from_chain",
]


@dataclass(frozen=True)
class CorrectionParams:
    N: int
    eps: float
    pi: TraceFreePi
    a1: float = 0.0
    a2: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.pi.n != self.N - 1:
            raise ValueError(f"pi must be {self.N - 1}x{self.N - 1} for N={self.N}")

    @property
    def n(self) -> int:
        return self.N - 1

    @property
    def pi_array(self) -> np.ndarray:
        return self.pi.as_array()


def laplacian_power_coefficient(N: int, p: Fraction) -> Fraction:
    """``c`` with ``Delta(h s^p) = c h s^(p-1)`` in R^N_+ for harmonic quadratic ``h``."""
    p = Fraction(p)
    return 2 * p * (N + 2 * p + 2)


def _qt(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    xbar = x[..., :-1]
    return xbar, np.einsum("...i,...i->...", xbar, xbar), x[..., -1]


def phi_jet(N: int, a1: float, a2: float, q: np.ndarray, t: np.ndarray) -> QTJet:
    """Profile ``F`` of ``Phi = eps h F``."""
    g = (N - 2) / 2
    s = QTJet.square_distance(q, t, 1.0)
    minus = QTJet.linear_t(q, t, -1.0)
    plus = QTJet.linear_t(q, t, 1.0)
    return ((minus * s.power(-N / 2)).scale(g)
            + (plus * s.power(-(N + 4) / 2)).scale(a1)
            + s.power(-(N + 2) / 2).scale(a2))


def phi_delta_jet(delta: float, q: np.ndarray, t: np.ndarray) -> QTJet:
    s = QTJet.square_distance(q, t, 1.0)
    minus = QTJet.linear_t(q, t, -1.0)
    return minus * s.power(-2.0) + s.power(-1.5).scale(delta)


def _eval_quadratic(c: CorrectionParams, F: QTJet, xbar: np.ndarray, deriv: tuple[int, ...]) -> np.ndarray:
    v, g, H = lift_quadratic(F, xbar, c.pi_array)
    counts = tuple(int(k) for k in deriv)
    if not counts or sum(counts) == 0:
        return c.eps * v
    if len(counts) != c.N or sum(counts) > 2:
        raise ValueError(f"deriv must be a length-{c.N} multi-index of order <= 2")
    axes = [a for a, k in enumerate(counts) for _ in range(k)]
    if len(axes) == 1:
        return c.eps * g[..., axes[0]]
    return c.eps * H[..., axes[0], axes[1]]


def eval_Phi(c: CorrectionParams, x: np.ndarray, deriv: tuple[int, ...] = ()) -> np.ndarray:
    if c.N < 4:
        raise ValueError("Phi is defined for N >= 4")
    xbar, q, t = _qt(x)
    return _eval_quadratic(c, phi_jet(c.N, c.a1, c.a2, q, t), xbar, deriv)


def eval_Phi_delta(c: CorrectionParams, x: np.ndarray, deriv: tuple[int, ...] = ()) -> np.ndarray:
    if c.N != 4:
        raise ValueError("Phi_delta is only defined for N = 4")
    xbar, q, t = _qt(x)
    return _eval_quadratic(c, phi_delta_jet(c.delta, q, t), xbar, deriv)


def q_profile(N: int, a1: float, a2: float, r2: np.ndarray) -> np.ndarray:
    """``q / (eps h)`` as a function of ``|x_bar|^2``."""
    S = 1.0 + np.asarray(r2, dtype=float)
    g = (N - 2) / 2
    return S ** (-N / 2) * (g + a1 * (S**-2 - 4 * S**-3) - 2 * a2 * S**-2)


def q_delta_profile(delta: float, r2: np.ndarray) -> np.ndarray:
    S = 1.0 + np.asarray(r2, dtype=float)
    return S**-2 + delta * S**-2.5


def eval_q(c: CorrectionParams, xbar: np.ndarray) -> np.ndarray:
    xbar = np.asarray(xbar, dtype=float)
    h = quadratic_form(xbar, c.pi_array)
    return c.eps * h * q_profile(c.N, c.a1, c.a2, np.einsum("...i,...i->...", xbar, xbar))


def eval_q_delta(c: CorrectionParams, xbar: np.ndarray) -> np.ndarray:
    if c.N != 4:
        raise ValueError("q_delta is only defined for N = 4")
    xbar = np.asarray(xbar, dtype=float)
    h = quadratic_form(xbar, c.pi_array)
    return c.eps * h * q_delta_profile(c.delta, np.einsum("...i,...i->...", xbar, xbar))


def _source(c: CorrectionParams, x: np.ndarray) -> np.ndarray:
    """``2 eps pi_ij x_N d_ij W`` from the lifted bubble Hessian."""
    xbar, q, t = _qt(x)
    _, _, H = lift_radial(bubble.bubble_jet(c.N, q, t), xbar)
    n = c.n
    return 2 * c.eps * t * np.einsum("...ij,ij->...", H[..., :n, :n], c.pi_array)


def _neg_laplacian(c: CorrectionParams, F: QTJet, x: np.ndarray) -> np.ndarray:
    xbar, _, _ = _qt(x)
    _, _, H = lift_quadratic(F, xbar, c.pi_array)
    return -c.eps * np.trace(H, axis1=-2, axis2=-1)


def phi_interior_residual(c: CorrectionParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(-Delta Phi, 2 eps pi_ij x_N d_ij W)``; the two agree pointwise."""
    _, q, t = _qt(x)
    return _neg_laplacian(c, phi_jet(c.N, c.a1, c.a2, q, t), x), _source(c, x)


def delta_source_identity(c: CorrectionParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(-Delta Phi_delta - 2 eps pi_ij x_4 d_ij W, 9 delta eps h s^(-5/2))``.

    The second entry is the magnitude of the extra source created by the
    ``delta`` term; callers compare the computed left side to it with
    whichever sign they are testing.
    """
    if c.N != 4:
        raise ValueError("Phi_delta is only defined for N = 4")
    xbar, q, t = _qt(x)
    lhs = _neg_laplacian(c, phi_delta_jet(c.delta, q, t), x) - _source(c, x)
    h = quadratic_form(xbar, c.pi_array)
    s = q + (t + 1) ** 2
    return lhs, 9 * c.delta * c.eps * h * s**-2.5


def _boundary_operator(c: CorrectionParams, F: QTJet, xbar: np.ndarray) -> np.ndarray:
    """``d_N U + N w^(2/(N-2)) U`` at ``x_N = 0`` for ``U = eps h F``."""
    h = quadratic_form(xbar, c.pi_array)
    r2 = np.einsum("...i,...i->...", xbar, xbar)
    return c.eps * h * (F.t + c.N * F.v / (1 + r2))


def q_consistency(c: CorrectionParams, xbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(q, d_N Phi + N w^(2/(N-2)) Phi)`` on the boundary."""
    xbar = np.asarray(xbar, dtype=float)
    r2 = np.einsum("...i,...i->...", xbar, xbar)
    F = phi_jet(c.N, c.a1, c.a2, r2, np.zeros_like(r2))
    return eval_q(c, xbar), _boundary_operator(c, F, xbar)


def q_delta_consistency(c: CorrectionParams, xbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xbar = np.asarray(xbar, dtype=float)
    r2 = np.einsum("...i,...i->...", xbar, xbar)
    F = phi_delta_jet(c.delta, r2, np.zeros_like(r2))
    return eval_q_delta(c, xbar), _boundary_operator(c, F, xbar)


# --------------------------------------------------------------------------
# radial building blocks

@dataclass(frozen=True)
class ChainValues:
    phi0: QTJet | None
    phi1: QTJet
    phi2: QTJet

    @property
    def difference(self) -> QTJet:
        return self.phi1 - self.phi2


def appendix_chain(N: int, a1: float, a2: float, q: np.ndarray, t: np.ndarray,
                   log_branch: bool | None = None) -> ChainValues:
    """Closed-form ``Phi_0, Phi_1, Phi_2`` as profiles in ``(q, t)``.

    Additive constants are fixed to zero.  ``Phi_0`` carries the coefficient
    ``a1 (N-4)/(N-2)`` so that ``Phi_1 = -d_N Phi_0 / (N-4)`` exactly.  At
    ``N = 6`` only the logarithmic branch of ``Phi_0`` exists.
    """
    if N < 5:
        raise ValueError("the radial chain needs N >= 5; use the Phi_delta path for N = 4")
    use_log = N == 6 if log_branch is None else log_branch
    if use_log != (N == 6):
        if N == 6:
            raise ValueError("N = 6 has no power-law Phi_0; the log branch is required")
        raise ValueError("the log branch of Phi_0 only applies at N = 6")
    s = QTJet.square_distance(q, t, 1.0)
    plus = QTJet.linear_t(q, t, 1.0)
    a0 = a1 * (N - 4) / (N - 2)
    if use_log:
        phi0 = s.log().scale(-1 / 8) + s.power(-2.0).scale(a0)
    else:
        phi0 = s.power(-(N - 6) / 2).scale(1 / (4 * (N - 6))) + s.power(-(N - 2) / 2).scale(a0)
    phi1 = (plus * s.power(-(N - 4) / 2)).scale(1 / (4 * (N - 4))) + (plus * s.power(-N / 2)).scale(a1)
    phi2 = s.power(-(N - 4) / 2).scale(1 / (2 * (N - 4))) + s.power(-(N - 2) / 2).scale(a2)
    return ChainValues(phi0, phi1, phi2)


def chain_residuals(N: int, a1: float, a2: float, x: np.ndarray) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Pairs ``(computed -Delta, expected right side)`` for each chain identity."""
    _, q, t = _qt(x)
    n = N - 1
    ch = appendix_chain(N, a1, a2, q, t)
    s = q + (t + 1) ** 2
    W = bubble.bubble_jet(N, q, t).v
    out = {
        "phi1": (-ch.phi1.laplacian(n, q), (t + 1) * s ** (-(N - 2) / 2)),
        "phi2": (-ch.phi2.laplacian(n, q), s ** (-(N - 2) / 2)),
        "difference": (-ch.difference.laplacian(n, q), t * W),
    }
    if ch.phi0 is not None:
        out["phi0"] = (-ch.phi0.laplacian(n, q), s ** (-(N - 4) / 2))
        out["phi1_from_phi0"] = (ch.phi1.v, -ch.phi0.t / (N - 4))
    return out


def chain_params_for(N: int, a1: float, a2: float) -> tuple[float, float]:
    """Chain parameters whose second derivatives reproduce ``Phi(a1, a2)``.

    ``2 pi_ij d_ij F = 8 h F_qq`` for trace-free ``pi``; matching the
    ``a``-terms gives ``a1 = 2N(N+2) a1_chain`` and ``a2 = -2N(N-2) a2_chain``.
    """
    return a1 / (2 * N * (N + 2)), -a2 / (2 * N * (N - 2))


def reconstruct_phi_from_chain(c: CorrectionParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(2 eps pi_ij d_ij (Phi_1 - Phi_2), Phi)`` at the points ``x``."""
    xbar, q, t = _qt(x)
    b1, b2 = chain_params_for(c.N, c.a1, c.a2)
    diff = appendix_chain(c.N, b1, b2, q, t).difference
    _, _, H = lift_radial(diff, xbar)
    n = c.n
    lhs = 2 * c.eps * np.einsum("...ij,ij->...", H[..., :n, :n], c.pi_array)
    return lhs, eval_Phi(c, x)
