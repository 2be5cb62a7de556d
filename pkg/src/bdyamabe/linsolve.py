"""Finite-difference solver for the linearized problem in the quadratic sector.

With ``Psi = h(x_bar) u(r, t)``, ``h = pi_ij x_i x_j`` harmonic and homogeneous
of degree 2, the Laplacian becomes ``h (u_rr + ((n+3)/r) u_r + u_tt)``.  The
problem is then two-dimensional:

    -(u_rr + ((n+3)/r) u_r + u_tt) = 2 eps N (N-2) t s^(-(N+2)/2)     in r, t > 0
    -u_t = N u / (1 + r^2) + g                                         on t = 0
    u_r = 0 on r = 0,   u = 0 on r = R and on t = T

The grid is a tensor product of sinh-stretched nodes (fine near the bubble,
coarse in the far field); stencils are the three-point non-uniform formulas,
which stay second order on smoothly mapped grids.  At ``r = 0`` the operator
is replaced by its limit ``(n+4) u_rr + u_tt`` with an even ghost node.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import spsolve

from ._jets import QTJet
from .bubble import bubble_jet
from .corrections import CorrectionParams, phi_jet, q_profile
from .tensors import TraceFreePi

__all__ = [
    "ReducedField",
    "SolveReport",
    "SolverError",
    "manufactured_convergence",
    "manufactured_problem",
    "manufactured_solution",
    "pairing_sweep",
    "reduced_source",
    "solve_reduced",
    "stretched_grid",
    "validate_solution",
]

Fn2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SolverError(RuntimeError):
    pass


def stretched_grid(length: float, nodes: int, stretch: float) -> np.ndarray:
    """``length * sinh(stretch * s) / sinh(stretch)`` on ``nodes`` equispaced ``s`` in [0, 1]."""
    s = np.linspace(0.0, 1.0, nodes)
    if stretch == 0:
        return length * s
    return length * np.sinh(stretch * s) / math.sinh(stretch)


def reduced_source(N: int, eps: float) -> Fn2:
    """Profile of ``2 eps pi_ij x_N d_ij W / h``."""
    def f(r, t):
        return 2 * eps * N * (N - 2) * t * (r * r + (t + 1) ** 2) ** (-(N + 2) / 2)
    return f


@dataclass(frozen=True)
class ReducedField:
    """Grid values of ``u`` with ``Psi = h u``; rows index ``r``, columns ``t``."""

    N: int
    eps: float
    r: np.ndarray
    t: np.ndarray
    u: np.ndarray
    residual: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.N - 1

    def at(self, r: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self._spline()(np.asarray(r), np.asarray(t), grid=False)

    def _spline(self) -> RectBivariateSpline:
        cache = self.meta.setdefault("_spline", None)
        if cache is None:
            cache = RectBivariateSpline(self.r, self.t, self.u, kx=3, ky=3)
            self.meta["_spline"] = cache
        return cache

    def as_field(self, pi: TraceFreePi):
        """The solution ``h u`` as a quadratic-class field (spline in ``(|x_bar|^2, t)``)."""
        from .pohozaev import QuadraticField

        spline = RectBivariateSpline(self.r**2, self.t, self.u, kx=3, ky=3)

        def prof(q, t):
            q = np.clip(q, 0.0, self.r[-1] ** 2)
            t = np.clip(t, 0.0, self.t[-1])
            ev = lambda dq, dt: spline(q, t, dx=dq, dy=dt, grid=False)
            return QTJet(ev(0, 0), ev(1, 0), ev(0, 1), ev(2, 0), ev(1, 1), ev(0, 2))

        return QuadraticField(self.N, pi, prof)


def _weights(x: np.ndarray, i: int) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Non-uniform three-point weights (first, second derivative) at interior node ``i``."""
    hm, hp = x[i] - x[i - 1], x[i + 1] - x[i]
    d1 = (-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp)))
    d2 = (2 / (hm * (hm + hp)), -2 / (hm * hp), 2 / (hp * (hm + hp)))
    return d1, d2


def solve_reduced(N: int, eps: float, R: float = 40.0, T: float = 40.0, nr: int = 129, nt: int = 129,
                  *, stretch: float = 3.0, source: Fn2 | None = None,
                  robin: Callable[[np.ndarray], np.ndarray] | None = None,
                  dirichlet: Fn2 | None = None, check: bool = True,
                  residual_tol: float = 1e-8) -> ReducedField:
    """Assemble and solve the reduced problem; see the module docstring.

    ``source``, ``robin`` (the ``g`` above) and ``dirichlet`` override the
    defaults for manufactured-solution testing.
    """
    if N not in (4, 5, 6) and check:
        raise ValueError("the linearized problem is solved for N in {4, 5, 6}")
    if check and (R < 20 or T < 20 or nr < 65 or nt < 65):
        raise ValueError("need R, T >= 20 and at least 65 nodes per axis")
    if nr < 5 or nt < 5:
        raise ValueError("grid too small")
    n = N - 1
    r = stretched_grid(R, nr, stretch)
    t = stretched_grid(T, nt, stretch)
    f = (source or reduced_source(N, eps))(r[:, None], t[None, :])
    g = robin(r) if robin is not None else np.zeros(nr)
    ubd = dirichlet or (lambda rr, tt: np.zeros(np.broadcast(rr, tt).shape))

    mr, mt = nr - 1, nt - 1  # unknowns: i < mr, j < mt
    idx = lambda i, j: i * mt + j
    rows, cols, vals = [], [], []
    rhs = np.zeros(mr * mt)

    def add(row, i, j, w):
        if i == mr or j == mt:
            rhs[row] -= w * float(ubd(r[i], t[j]))
        else:
            rows.append(row)
            cols.append(idx(i, j))
            vals.append(w)

    for i in range(mr):
        for j in range(mt):
            row = idx(i, j)
            rhs[row] += f[i, j]
            # radial part, sign flipped so the operator is -(...)
            if i == 0:
                h1 = r[1]
                c = (n + 4) * 2 / h1**2
                add(row, 0, j, c)
                add(row, 1, j, -c)
            else:
                d1, d2 = _weights(r, i)
                coef = (n + 3) / r[i]
                for k, di in enumerate((-1, 0, 1)):
                    add(row, i + di, j, -(d2[k] + coef * d1[k]))
            # normal part
            if j == 0:
                h1 = t[1]
                w_robin = N / (1 + r[i] ** 2)
                # ghost u_{-1} = u_1 + 2 h1 (N w u_0 + g)
                add(row, i, 0, 2 / h1**2 - 2 * w_robin / h1)
                add(row, i, 1, -2 / h1**2)
                rhs[row] += 2 * g[i] / h1
            else:
                _, d2 = _weights(t, j)
                for k, dj in enumerate((-1, 0, 1)):
                    add(row, i, j + dj, -d2[k])

    A = sp.csr_matrix((vals, (rows, cols)), shape=(mr * mt, mr * mt))
    sol = spsolve(A.tocsc(), rhs)
    if not np.all(np.isfinite(sol)):
        raise SolverError("sparse solve produced non-finite values")
    res = float(np.linalg.norm(A @ sol - rhs, np.inf) / max(1.0, np.linalg.norm(rhs, np.inf)))
    if res > residual_tol:
        raise SolverError(f"linear residual {res:.2e} above tolerance")
    u = np.empty((nr, nt))
    u[:mr, :mt] = sol.reshape(mr, mt)
    u[mr, :] = ubd(r[mr], t)
    u[:, mt] = ubd(r, t[mt])
    return ReducedField(N, eps, r, t, u, res, {"R": R, "T": T, "stretch": stretch})


# --------------------------------------------------------------------------
# manufactured solution

def manufactured_solution(N: int) -> Callable[[np.ndarray, np.ndarray], QTJet]:
    """``u* = t s^(-(N-1)/2)`` as a jet in ``(q = r^2, t)``."""
    def jet(q, t):
        s = QTJet.square_distance(q, t, 1.0)
        return QTJet.linear_t(q, t) * s.power(-(N - 1) / 2)
    return jet


def manufactured_problem(N: int) -> dict[str, Callable]:
    """Source, Robin datum and Dirichlet data reproducing ``u*`` exactly."""
    n = N - 1
    jet = manufactured_solution(N)

    def source(r, t):
        q = np.broadcast_to(r * r, np.broadcast(r, t).shape)
        return -jet(q, np.broadcast_to(t, q.shape)).quadratic_laplacian(n, q)

    def robin(r):
        q = r * r
        F = jet(q, np.zeros_like(q))
        return -F.t - N * F.v / (1 + q)

    def exact(r, t):
        r, t = np.broadcast_arrays(np.asarray(r, float), np.asarray(t, float))
        return jet(r * r, t).v

    return {"source": source, "robin": robin, "dirichlet": exact, "exact": exact}


# --------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class SolveReport:
    N: int
    eps: float
    grid: tuple[int, int]
    linear_residual: float
    decay_exponent: float
    decay_exponent_plain: float
    point_conditions: dict[str, float]
    orthogonality: dict[str, float]
    energy: float
    energy_scale: float
    boundary_consistency: float
    empirical_constant: float
    a1: float
    a2: float

    @property
    def energy_ok(self) -> bool:
        return self.energy >= -1e-6 * self.energy_scale

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["grid"] = list(self.grid)
        out["energy_ok"] = self.energy_ok
        return out


def _d_dt0(t: np.ndarray, col0: np.ndarray, col1: np.ndarray, col2: np.ndarray) -> np.ndarray:
    """One-sided second-order derivative at ``t[0]`` on a non-uniform grid."""
    h1, h2 = t[1] - t[0], t[2] - t[0]
    return (-(h1 + h2) / (h1 * h2) * col0 + h2 / (h1 * (h2 - h1)) * col1
            - h1 / (h2 * (h2 - h1)) * col2)


def _grad(x: np.ndarray, v: np.ndarray, axis: int) -> np.ndarray:
    return np.gradient(v, x, axis=axis, edge_order=2)


def _fit_decay(rho: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Decay exponent with and without a ``1/rho`` correction to the local slope.

    The far field is ``A rho^-p (1 + B/rho + ...)``, so the local slope
    ``-d log u / d log rho`` is ``p + O(1/rho)``; extrapolating it linearly in
    ``1/rho`` removes the first correction.
    """
    if len(rho) < 6 or np.any(values <= 0) or rho[-1] < 2 * rho[0]:
        raise ValueError("fit window too short (need a dyadic range of nonzero values)")
    logs = np.log(rho)
    local = -np.gradient(np.log(values), logs)
    corrected = float(np.polyfit(1 / rho, local, 1)[1])
    plain = float(-np.polyfit(logs, np.log(values), 1)[0])
    return corrected, plain


def validate_solution(fld: ReducedField, c: CorrectionParams, window: tuple[float, float] | None = None) -> SolveReport:
    """Decay, point and orthogonality conditions, energy and boundary consistency.

    The decay exponent is fitted to ``|u(r, 0)|`` over ``window`` (default
    ``[R/16, R/4]``); ``decay_exponent_plain`` is the single power-law fit.
    """
    if c.N != fld.N:
        raise ValueError("dimension mismatch")
    N, n, eps = fld.N, fld.n, fld.eps
    if not math.isclose(c.eps, eps, rel_tol=1e-12):
        raise ValueError("correction eps differs from the solve")
    r, t, u = fld.r, fld.t, fld.u
    R = float(min(r[-1], t[-1]))
    lo, hi = window or (R / 16, R / 4)

    rho = np.geomspace(lo, hi, 24)
    trace = np.abs(fld._spline()(rho, np.zeros_like(rho), grid=False))
    decay, raw_decay = _fit_decay(rho, trace)

    # Xi = h xi with xi = u - eps F_Phi
    RR, TT = np.meshgrid(r, t, indexing="ij")
    Fphi = phi_jet(N, c.a1, c.a2, RR**2, TT)
    phi_v = eps * Fphi.v
    phi_r = eps * 2 * RR * Fphi.q
    phi_t = eps * Fphi.t
    xi = u - phi_v
    xi_r = _grad(r, u, 0) - phi_r
    xi_t = _grad(t, u, 1) - phi_t

    u_t0 = _d_dt0(t, u[:, 0], u[:, 1], u[:, 2])
    xi_t0 = u_t0 - phi_t[:, 0]
    w = 1 / (1 + r**2)
    lhs = -xi_t0 - N * w * xi[:, 0]
    qprof = eps * q_profile(N, c.a1, c.a2, r**2)
    inner = r <= R / 4
    scale = max(np.max(np.abs(qprof[inner])), 1e-300)
    consistency = float(np.max(np.abs(lhs - qprof)[inner]) / scale)

    c4 = 2 / (n * (n + 2))
    weight = r[:, None] ** (n - 1)
    grad_density = weight * ((4 * RR**2 / n) * xi**2
                             + c4 * RR**4 * (4 * xi * xi_r / np.where(RR > 0, RR, 1) + xi_r**2 + xi_t**2))
    grad_term = float(np.trapezoid(np.trapezoid(grad_density, t, axis=1), r))
    bdy_term = float(np.trapezoid(r ** (n - 1) * c4 * r**4 * xi[:, 0] ** 2 * w, r))
    energy = grad_term - N * bdy_term

    tr = float(np.trace(c.pi_array))
    angular_mean_h = tr / n  # <h> on every tangential sphere
    radial_wpsi = float(np.trapezoid(r ** (n - 1) * r**2 * w ** (N / 2) * u[:, 0], r))
    # h and grad h vanish at the origin, so Psi and its first derivatives do too
    origin = np.zeros(n)
    P = c.pi_array
    u0, ut0 = float(u[0, 0]), float(u_t0[0])
    point = {"Psi(0)": float(origin @ P @ origin) * u0,
             "grad_xbar_Psi(0)": float(np.abs(2 * P @ origin).max()) * u0,
             "d_N Psi(0)": float(origin @ P @ origin) * ut0}
    # grad(h xi) . grad W = h (2 xi W_r / r + xi_r W_r + xi_t W_t)
    Wj = bubble_jet(N, RR**2, TT)
    W_r, W_t = 2 * RR * Wj.q, Wj.t
    pair_density = weight * RR**2 * (2 * xi * 2 * Wj.q + xi_r * W_r + xi_t * W_t)
    radial_pair = float(np.trapezoid(np.trapezoid(pair_density, t, axis=1), r))
    ortho = {"int_w_pow_Psi": angular_mean_h * radial_wpsi,
             "int_grad_Xi_grad_W": angular_mean_h * radial_pair}

    dist = np.sqrt(RR**2 + TT**2)
    empirical = float(np.max(RR**2 * np.abs(u) * (1 + dist) ** (N - 3)) / eps)
    return SolveReport(N, eps, (len(r), len(t)), fld.residual, decay, raw_decay, point, ortho,
                       energy, grad_term, consistency, empirical, c.a1, c.a2)


def manufactured_convergence(N: int, sizes: tuple[int, ...] = (65, 129, 257), R: float = 20.0) -> dict:
    """L-infinity and L2 errors against ``u*`` and the observed orders between successive grids."""
    prob = manufactured_problem(N)
    linf, l2 = [], []
    for m in sizes:
        fld = solve_reduced(N, 1.0, R, R, m, m, source=prob["source"], robin=prob["robin"],
                            dirichlet=prob["dirichlet"])
        err = np.abs(fld.u - prob["exact"](fld.r[:, None], fld.t[None, :]))
        linf.append(float(err.max()))
        l2.append(float(np.sqrt(np.trapezoid(np.trapezoid(err**2, fld.t, axis=1), fld.r))))
    order = lambda e: [math.log2(a / b) for a, b in itertools.pairwise(e)]
    return {"sizes": list(sizes), "linf": linf, "l2": l2, "order_linf": order(linf), "order_l2": order(l2)}


def pairing_sweep(N: int, eps: float, a1: float, a2: float, pi: TraceFreePi,
                  radii: tuple[float, ...] = (20.0, 40.0, 80.0), nodes: int = 129) -> dict[float, float]:
    """Reduced ``int grad Xi . grad W`` on truncated domains of growing size."""
    c = CorrectionParams(N, eps, pi, a1, a2)
    return {R: validate_solution(solve_reduced(N, eps, R, R, nodes, nodes), c).orthogonality["int_grad_Xi_grad_W"]
            for R in radii}
