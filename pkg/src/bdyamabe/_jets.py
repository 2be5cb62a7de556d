"""Second-order jets of profiles F(q, t), with q = |x_bar - xi|^2 and t = x_N.

Every field in the toolkit is either such a profile (tangentially radial) or
``h(x_bar) * F(q, t)`` with ``h = pi_ij x_i x_j``.  Working in ``q`` rather than
``r`` keeps the tangential derivatives regular on the axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QTJet:
    v: np.ndarray
    q: np.ndarray
    t: np.ndarray
    qq: np.ndarray
    qt: np.ndarray
    tt: np.ndarray

    @staticmethod
    def constant(c: float, like: np.ndarray) -> QTJet:
        z = np.zeros_like(like, dtype=float)
        return QTJet(z + c, z, z, z, z, z)

    @staticmethod
    def linear_t(q: np.ndarray, t: np.ndarray, shift: float = 0.0) -> QTJet:
        """The profile ``t + shift``."""
        z = np.zeros(np.broadcast(q, t).shape)
        return QTJet(z + t + shift, z, z + 1.0, z, z, z)

    @staticmethod
    def square_distance(q: np.ndarray, t: np.ndarray, shift: float) -> QTJet:
        """``s = q + (t + shift)^2``."""
        z = np.zeros(np.broadcast(q, t).shape)
        return QTJet(z + q + (t + shift) ** 2, z + 1.0, z + 2.0 * (t + shift), z, z, z + 2.0)

    def __add__(self, o: QTJet) -> QTJet:
        return QTJet(self.v + o.v, self.q + o.q, self.t + o.t,
                     self.qq + o.qq, self.qt + o.qt, self.tt + o.tt)

    def __sub__(self, o: QTJet) -> QTJet:
        return self + o.scale(-1.0)

    def scale(self, c: float) -> QTJet:
        return QTJet(c * self.v, c * self.q, c * self.t, c * self.qq, c * self.qt, c * self.tt)

    def __mul__(self, o: QTJet | float) -> QTJet:
        if not isinstance(o, QTJet):
            return self.scale(float(o))
        return QTJet(
            self.v * o.v,
            self.q * o.v + self.v * o.q,
            self.t * o.v + self.v * o.t,
            self.qq * o.v + 2 * self.q * o.q + self.v * o.qq,
            self.qt * o.v + self.q * o.t + self.t * o.q + self.v * o.qt,
            self.tt * o.v + 2 * self.t * o.t + self.v * o.tt,
        )

    __rmul__ = __mul__

    def compose(self, g: np.ndarray, g1: np.ndarray, g2: np.ndarray) -> QTJet:
        """Chain rule for ``G(self)`` given ``G, G', G''`` evaluated at ``self.v``."""
        return QTJet(
            g,
            g1 * self.q,
            g1 * self.t,
            g2 * self.q * self.q + g1 * self.qq,
            g2 * self.q * self.t + g1 * self.qt,
            g2 * self.t * self.t + g1 * self.tt,
        )

    def power(self, p: float) -> QTJet:
        s = self.v
        return self.compose(s**p, p * s ** (p - 1), p * (p - 1) * s ** (p - 2))

    def log(self) -> QTJet:
        s = self.v
        return self.compose(np.log(s), 1.0 / s, -1.0 / s**2)

    # reduced Laplacians on R^n x R_+ (n tangential directions)
    def laplacian(self, n: int, qv: np.ndarray) -> np.ndarray:
        return 2 * n * self.q + 4 * qv * self.qq + self.tt

    def quadratic_laplacian(self, n: int, qv: np.ndarray) -> np.ndarray:
        """``Delta(h F) / h`` for ``h`` harmonic, homogeneous of degree 2."""
        return 2 * (n + 4) * self.q + 4 * qv * self.qq + self.tt


def lift_radial(F: QTJet, xbar: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian in R^N of ``F(|xbar|^2, t)``.

    ``xbar`` holds the tangential offsets (``x_bar - xi``), shape ``(..., n)``.
    """
    n = xbar.shape[-1]
    N = n + 1
    shape = xbar.shape[:-1]
    grad = np.zeros(shape + (N,))
    hess = np.zeros(shape + (N, N))
    grad[..., :n] = 2 * xbar * F.q[..., None]
    grad[..., n] = F.t
    eye = np.eye(n)
    hess[..., :n, :n] = (2 * F.q[..., None, None] * eye
                         + 4 * F.qq[..., None, None] * xbar[..., :, None] * xbar[..., None, :])
    hess[..., :n, n] = 2 * xbar * F.qt[..., None]
    hess[..., n, :n] = hess[..., :n, n]
    hess[..., n, n] = F.tt
    return F.v, grad, hess


def lift_quadratic(F: QTJet, xbar: np.ndarray, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of ``h(xbar) F``, ``h = pi_ij x_i x_j``."""
    n = xbar.shape[-1]
    N = n + 1
    v, g, H = lift_radial(F, xbar)
    px = xbar @ pi
    h = np.einsum("...i,...i->...", px, xbar)
    dh = np.zeros(xbar.shape[:-1] + (N,))
    dh[..., :n] = 2 * px
    ddh = np.zeros(xbar.shape[:-1] + (N, N))
    ddh[..., :n, :n] = 2 * pi
    value = h * v
    grad = dh * v[..., None] + h[..., None] * g
    outer = dh[..., :, None] * g[..., None, :]
    hess = ddh * v[..., None, None] + outer + np.swapaxes(outer, -1, -2) + h[..., None, None] * H
    return value, grad, hess


def quadratic_form(xbar: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", xbar, pi, xbar)
