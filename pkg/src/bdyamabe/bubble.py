"""The half-space bubble ``W = lam^g / (|x_bar - xi|^2 + (x_N + lam)^2)^g``, g = (N-2)/2,
its boundary trace, and the kernel fields of the linearized boundary problem."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ._jets import QTJet, lift_radial

__all__ = [
    "BubbleParams",
    "bubble_jet",
    "eval_W",
    "eval_Z",
    "kernel_residual",
    "residual_bubble",
    "robin_weight",
    "trace_w",
    "z0_jet",
]


@dataclass(frozen=True)
class BubbleParams:
    N: int
    lam: float = 1.0
    xi: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.N < 3:
            raise ValueError("dimension N must be at least 3")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        xi = tuple(float(v) for v in self.xi) or (0.0,) * (self.N - 1)
        if len(xi) != self.N - 1:
            raise ValueError(f"xi must have {self.N - 1} entries")
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.N - 1

    @property
    def gamma(self) -> float:
        return (self.N - 2) / 2


def _split(p: BubbleParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.N:
        raise ValueError(f"points need {p.N} coordinates, got {x.shape[-1]}")
    ybar = x[..., :-1] - np.asarray(p.xi)
    q = np.einsum("...i,...i->...", ybar, ybar)
    return ybar, q, x[..., -1]


def bubble_jet(N: int, q: np.ndarray, t: np.ndarray, lam: float = 1.0) -> QTJet:
    g = (N - 2) / 2
    s = QTJet.square_distance(q, t, lam)
    return s.power(-g).scale(lam**g)


def z0_jet(N: int, q: np.ndarray, t: np.ndarray, lam: float = 1.0) -> QTJet:
    """``-dW/d lam``; at lam = 1 this is ``g s^(-g-1) (1 - q - t^2)``."""
    g = (N - 2) / 2
    s = QTJet.square_distance(q, t, lam)
    shifted = QTJet.linear_t(q, t, lam)
    return (s.power(-g).scale(-g * lam ** (g - 1))
            + (shifted * s.power(-g - 1)).scale(2 * g * lam**g))


def _zi_profile(N: int, q: np.ndarray, t: np.ndarray, lam: float) -> QTJet:
    g = (N - 2) / 2
    return QTJet.square_distance(q, t, lam).power(-g - 1).scale(2 * g * lam**g)


def _select(v: np.ndarray, grad: np.ndarray, hess: np.ndarray, deriv: Sequence[int], N: int) -> np.ndarray:
    counts = tuple(int(c) for c in deriv)
    if not counts:
        return v
    if len(counts) != N or any(c < 0 for c in counts) or sum(counts) > 2:
        raise ValueError(f"deriv must be a length-{N} multi-index of order <= 2")
    axes = [a for a, c in enumerate(counts) for _ in range(c)]
    if len(axes) == 0:
        return v
    if len(axes) == 1:
        return grad[..., axes[0]]
    return hess[..., axes[0], axes[1]]


def eval_W(p: BubbleParams, x: np.ndarray, deriv: Sequence[int] = ()) -> np.ndarray:
    """Closed-form value or partial derivative (multi-index of counts) of the bubble."""
    ybar, q, t = _split(p, x)
    v, g, H = lift_radial(bubble_jet(p.N, q, t, p.lam), ybar)
    return _select(v, g, H, deriv, p.N)


def eval_Z(p: BubbleParams, index: int, x: np.ndarray, deriv: Sequence[int] = ()) -> np.ndarray:
    """Kernel field: ``Z^0 = -dW/d lam`` and ``Z^i = dW/d xi_i`` for ``i = 1..n``."""
    ybar, q, t = _split(p, x)
    if index == 0:
        v, g, H = lift_radial(z0_jet(p.N, q, t, p.lam), ybar)
        return _select(v, g, H, deriv, p.N)
    if not 1 <= index <= p.n:
        raise ValueError(f"kernel index must be in 0..{p.n}")
    a = index - 1
    G, dG, ddG = lift_radial(_zi_profile(p.N, q, t, p.lam), ybar)
    y = ybar[..., a]
    v = y * G
    e = np.zeros(p.N)
    e[a] = 1.0
    grad = e * G[..., None] + y[..., None] * dG
    outer = e[:, None] * dG[..., None, :]
    hess = outer + np.swapaxes(outer, -1, -2) + y[..., None, None] * ddG
    return _select(v, grad, hess, deriv, p.N)


def trace_w(p: BubbleParams, xbar: np.ndarray) -> np.ndarray:
    """Boundary trace ``w(x_bar) = W(x_bar, 0)``."""
    xbar = np.asarray(xbar, dtype=float)
    pts = np.concatenate([xbar, np.zeros(xbar.shape[:-1] + (1,))], axis=-1)
    return eval_W(p, pts)


def robin_weight(p: BubbleParams, xbar: np.ndarray) -> np.ndarray:
    """``w^(2/(N-2)) = lam / (|x_bar - xi|^2 + lam^2)``."""
    xbar = np.asarray(xbar, dtype=float) - np.asarray(p.xi)
    return p.lam / (np.einsum("...i,...i->...", xbar, xbar) + p.lam**2)


def _fd_laplacian(f, x: np.ndarray, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lap = -2 * x.shape[-1] * f(x)
    for a in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[a] = h
        lap = lap + f(x + e) + f(x - e)
    return lap / h**2


def residual_bubble(p: BubbleParams, x: np.ndarray, fd_step: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Interior residual ``Delta W`` and boundary residual ``-d_N W - (N-2) w^(N/(N-2))``.

    With ``fd_step`` the Laplacian is a second-order central stencil, so the
    interior residual measures discretization error only.  The boundary
    residual is evaluated at the projection of ``x`` onto ``x_N = 0``.
    """
    x = np.asarray(x, dtype=float)
    if fd_step is None:
        _, q, t = _split(p, x)
        interior = bubble_jet(p.N, q, t, p.lam).laplacian(p.n, q)
    else:
        interior = _fd_laplacian(lambda y: eval_W(p, y), x, fd_step)
    xb = x.copy()
    xb[..., -1] = 0.0
    dN = eval_W(p, xb, _unit(p.N, p.N - 1))
    w = eval_W(p, xb)
    boundary = -dN - (p.N - 2) * w ** (p.N / (p.N - 2))
    return interior, boundary


def kernel_residual(p: BubbleParams, index: int, xbar: np.ndarray) -> np.ndarray:
    """``-d_N Z - N w^(2/(N-2)) Z`` on the boundary (zero for kernel fields)."""
    xbar = np.asarray(xbar, dtype=float)
    pts = np.concatenate([xbar, np.zeros(xbar.shape[:-1] + (1,))], axis=-1)
    z = eval_Z(p, index, pts)
    dz = eval_Z(p, index, pts, _unit(p.N, p.N - 1))
    return -dz - p.N * robin_weight(p, xbar) * z


def _unit(N: int, axis: int) -> tuple[int, ...]:
    e = [0] * N
    e[axis] = 1
    return tuple(e)
