"""Trace-free 2-tensors, the fourth-order metric jet in Fermi coordinates,
and exact monomial moments over unit spheres and upper hemispheres."""

from __future__ import annotations

import itertools
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .quadrature import gamma_half_integer
from .scalars import ExactScalar, PiMonomial, sphere_area

__all__ = [
    "MetricJet",
    "Poly",
    "SphereMoment",
    "TraceFreePi",
    "hemisphere_integral",
    "metric_jet_A",
    "metric_jet_polynomials",
    "moment",
    "quartic_contraction",
]

# sparse polynomial: exponent tuple -> coefficient (Fraction or float)
Poly = dict[tuple[int, ...], Any]


def _is_exact(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


# --------------------------------------------------------------------------
# trace-free symmetric tensors

@dataclass(frozen=True)
class TraceFreePi:
    """Symmetric trace-free ``n x n`` tensor, exact (Fraction) or floating."""

    entries: tuple[tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(Fraction(v) if _is_exact(v) else float(v) for v in row)
                     for row in self.entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("pi must be a non-empty square array")
        exact = all(_is_exact(v) for r in rows for v in r)
        tol = 0 if exact else 1e-12
        for i, j in itertools.combinations(range(n), 2):
            if abs(rows[i][j] - rows[j][i]) > tol:
                raise ValueError(f"pi is not symmetric at ({i}, {j})")
        trace = sum(rows[i][i] for i in range(n))
        if abs(trace) > tol * max(1.0, float(max(abs(v) for r in rows for v in r))):
            raise ValueError(f"pi has nonzero trace {trace}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_array(cls, array: Iterable[Iterable[Any]]) -> TraceFreePi:
        return cls(tuple(tuple(row) for row in array))

    @classmethod
    def diag(cls, *values: Any) -> TraceFreePi:
        n = len(values)
        return cls(tuple(tuple(values[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, *, exact: bool = False,
               denominator: int = 12) -> TraceFreePi:
        if exact:
            raw = [[Fraction(int(rng.integers(-24, 25)), denominator) for _ in range(n)]
                   for _ in range(n)]
            sym = [[(raw[i][j] + raw[j][i]) / 2 for j in range(n)] for i in range(n)]
            shift = sum(sym[i][i] for i in range(n)) / n
            for i in range(n):
                sym[i][i] -= shift
            return cls.from_array(sym)
        a = rng.standard_normal((n, n))
        a = 0.5 * (a + a.T)
        a -= np.trace(a) / n * np.eye(n)
        return cls.from_array(a.tolist())

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for r in self.entries for v in r)

    def norm_sq(self) -> Any:
        return sum(v * v for r in self.entries for v in r)

    def max_abs(self) -> float:
        return float(max(abs(v) for r in self.entries for v in r))

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.entries])

    def __mul__(self, c: Any) -> TraceFreePi:
        return TraceFreePi(tuple(tuple(v * c for v in r) for r in self.entries))

    __rmul__ = __mul__


def quartic_contraction(pi: TraceFreePi) -> Any:
    """Coefficient ``c`` in ``pi_ij pi_kl <x_i x_j x_k x_l> = c |x|^4 |S^{n-1}|``.

    The isotropic fourth moment is ``(d_ij d_kl + d_ik d_jl + d_il d_jk)/(n(n+2))``;
    the trace term drops for trace-free ``pi`` and the other two each give
    ``|pi|^2``.
    """
    if not isinstance(pi, TraceFreePi):
        raise TypeError("quartic_contraction expects a validated TraceFreePi")
    n = pi.n
    return Fraction(2, n * (n + 2)) * pi.norm_sq()


# --------------------------------------------------------------------------
# sphere moments

@dataclass(frozen=True)
class SphereMoment:
    """``int x^alpha dS`` over the unit sphere in R^N or its ``x_N >= 0`` half."""

    alpha: tuple[int, ...]
    hemisphere: bool
    value: PiMonomial

    @property
    def dim(self) -> int:
        return len(self.alpha)

    def in_units_of_sphere(self, k: int) -> ExactScalar:
        """The moment as an exact multiple of ``|S^k|``."""
        if self.value.coeff == 0:
            return ExactScalar()
        return (self.value / sphere_area(k)).exact()

    def __float__(self) -> float:
        return float(self.value)


def moment(alpha: Iterable[int], hemisphere: bool = False) -> SphereMoment:
    """Exact monomial moment by the Gamma product formula.

    On the full sphere: ``2 prod Gamma(b_i) / Gamma(sum b_i)`` with
    ``b_i = (alpha_i+1)/2``, zero when some power is odd.  On the upper
    hemisphere only tangential odd powers vanish and the value is halved.
    """
    alpha = tuple(int(a) for a in alpha)
    if not alpha or any(a < 0 for a in alpha):
        raise ValueError("alpha must be a non-empty multi-index of non-negative ints")
    zero = SphereMoment(alpha, hemisphere, PiMonomial(Fraction(0), 0))
    tangential = alpha[:-1] if hemisphere else alpha
    if any(a % 2 for a in tangential):
        return zero
    coeff = Fraction(2)
    half_pi = 0
    for a in alpha:
        c, k = gamma_half_integer(Fraction(a + 1, 2))
        coeff *= c
        half_pi += k
    c, k = gamma_half_integer(Fraction(sum(alpha) + len(alpha), 2))
    coeff /= c
    half_pi -= k
    if hemisphere:
        coeff /= 2
    if half_pi % 2:
        raise AssertionError("monomial moments carry integer powers of pi")
    return SphereMoment(alpha, hemisphere, PiMonomial(coeff, half_pi // 2))


def hemisphere_integral(poly: Poly, dim: int, radius: Any = 1) -> Any:
    """``int_{|x|=radius, x_N>0} poly dS``.

    Exact polynomials return an ExactScalar multiple of ``|S^{dim-2}|``;
    floating ones return a float (the area factor multiplied in).
    """
    exact = all(_is_exact(c) for c in poly.values()) and _is_exact(radius)
    total: Any = ExactScalar() if exact else 0.0
    for alpha, c in poly.items():
        if c == 0:
            continue
        m = moment(alpha, hemisphere=True)
        if m.value.coeff == 0:
            continue
        scale = Fraction(radius) ** (sum(alpha) + dim - 1) if exact else float(radius) ** (sum(alpha) + dim - 1)
        if exact:
            total += m.in_units_of_sphere(dim - 2) * (Fraction(c) * scale)
        else:
            total += float(m) * float(c) * scale
    return total


# --------------------------------------------------------------------------
# polynomial helpers (exponent tuples over N variables)

def _mono(dim: int, *indices: int) -> tuple[int, ...]:
    e = [0] * dim
    for i in indices:
        e[i] += 1
    return tuple(e)


def _padd(p: Poly, key: tuple[int, ...], c: Any) -> None:
    if c == 0:
        return
    v = p.get(key, 0) + c
    if v == 0:
        p.pop(key, None)
    else:
        p[key] = v


def poly_derivative(p: Poly, var: int) -> Poly:
    out: Poly = {}
    for e, c in p.items():
        if e[var]:
            d = list(e)
            d[var] -= 1
            _padd(out, tuple(d), c * e[var])
    return out


def poly_times_var(p: Poly, var: int) -> Poly:
    out: Poly = {}
    for e, c in p.items():
        d = list(e)
        d[var] += 1
        _padd(out, tuple(d), c)
    return out


def poly_eval(p: Poly, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for e, c in p.items():
        out = out + float(c) * np.prod(x ** np.array(e), axis=-1)
    return out


# --------------------------------------------------------------------------
# metric jet

_JET_FIELDS = {
    "II": 2, "dII": 3, "ddII": 4, "R_h": 4, "dR_h": 5,
    "R_N": 2, "dR_N": 3, "dNR_N": 2,
}


def _to_array(value: Any, rank: int, n: int) -> np.ndarray:
    arr = np.array(value, dtype=object) if value is not None else np.zeros((n,) * rank, dtype=object)
    if arr.shape != (n,) * rank:
        raise ValueError(f"expected shape {(n,) * rank}, got {arr.shape}")
    flat = [Fraction(v) if _is_exact(v) or isinstance(v, str) else float(v) for v in arr.flat]
    out = np.empty(arr.shape, dtype=object)
    out.flat[:] = flat
    return out


@dataclass(frozen=True, eq=False)
class MetricJet:
    """Pointwise curvature data entering the fourth-order metric expansion.

    Index conventions (all tangential, ``0..n-1``):
    ``II[i,j]``, ``dII[i,j,k]`` = II_{ij,k}, ``ddII[i,j,k,l]`` = II_{ij,kl},
    ``R_h[i,k,j,l]`` and ``dR_h[i,k,j,l,m]`` for the boundary metric,
    ``R_N[i,j]`` = R_{iNjN}, ``dR_N[i,j,k]`` = R_{iNjN,k},
    ``dNR_N[i,j]`` = R_{iNjN,N}.
    """

    n: int
    II: np.ndarray = field(default=None)
    dII: np.ndarray = field(default=None)
    ddII: np.ndarray = field(default=None)
    R_h: np.ndarray = field(default=None)
    dR_h: np.ndarray = field(default=None)
    R_N: np.ndarray = field(default=None)
    dR_N: np.ndarray = field(default=None)
    dNR_N: np.ndarray = field(default=None)
    conformal_normalized: bool = False
    strict: bool = False

    def __post_init__(self) -> None:
        for name, rank in _JET_FIELDS.items():
            object.__setattr__(self, name, _to_array(getattr(self, name), rank, self.n))
        if self.strict:
            problems = self.violations()
            if problems:
                raise ValueError("invalid metric jet: " + "; ".join(problems))

    @property
    def dim(self) -> int:
        return self.n + 1

    def scaled(self, c: Any) -> MetricJet:
        return MetricJet(self.n, **{k: getattr(self, k) * c for k in _JET_FIELDS},
                         conformal_normalized=self.conformal_normalized)

    def __add__(self, other: MetricJet) -> MetricJet:
        return MetricJet(self.n, **{k: getattr(self, k) + getattr(other, k) for k in _JET_FIELDS},
                         conformal_normalized=self.conformal_normalized and other.conformal_normalized)

    def violations(self, tol: float = 1e-10) -> list[str]:
        """Symmetry defects, plus normalization defects when the flag is set."""
        out = []
        r = range(self.n)

        def bad(x: Any) -> bool:
            return abs(x) > tol

        if any(bad(self.II[i, j] - self.II[j, i]) for i in r for j in r):
            out.append("II not symmetric")
        if any(bad(self.R_N[i, j] - self.R_N[j, i]) for i in r for j in r):
            out.append("R_iNjN not symmetric")
        R = self.R_h
        for i, k, j, l in itertools.product(r, repeat=4):
            if bad(R[i, k, j, l] + R[k, i, j, l]) or bad(R[i, k, j, l] - R[j, l, i, k]):
                out.append("R_h lacks Riemann symmetries")
                break
            if bad(R[i, k, j, l] + R[i, j, l, k] + R[i, l, k, j]):
                out.append("R_h violates first Bianchi")
                break
        if self.conformal_normalized:
            if bad(sum(self.II[i, i] for i in r)):
                out.append("mean curvature H != 0")
            if any(bad(sum(self.dII[i, i, k] for i in r)) for k in r):
                out.append("H_{,k} != 0")
            if any(bad(sum(self.ddII[i, i, k, l] + self.ddII[i, i, l, k] for i in r))
                   for k in r for l in r):
                out.append("Sym H_{,kl} != 0")
            if any(bad(sum(R[i, k, j, k] for k in r)) for i in r for j in r):
                out.append("Ric[h] != 0")
            pi_sq = sum(self.II[i, j] ** 2 for i in r for j in r)
            if bad(sum(self.R_N[i, i] for i in r) + pi_sq):
                out.append("R_NN != -|pi|^2")
            if any(bad(sum(self.dR_N[i, i, k] for i in r)) for k in r):
                out.append("R_NN,k != 0")
            if bad(sum(self.dNR_N[i, i] for i in r)):
                out.append("R_NN,N != 0")
        return out

    # -- serialization
    def to_json(self) -> dict[str, Any]:
        def enc(a: np.ndarray) -> Any:
            return np.vectorize(lambda v: str(v) if isinstance(v, Fraction) else v, otypes=[object])(a).tolist()

        payload = {k: enc(getattr(self, k)) for k in _JET_FIELDS}
        payload.update(n=self.n, conformal_normalized=self.conformal_normalized)
        return payload

    @classmethod
    def from_json(cls, payload: Mapping[str, Any] | str | Path, strict: bool = False) -> MetricJet:
        if isinstance(payload, (str, Path)):
            payload = json.loads(Path(payload).read_text())
        n = int(payload["n"])

        def dec(v: Any) -> Any:
            if isinstance(v, list):
                return [dec(x) for x in v]
            return Fraction(v) if isinstance(v, (str, int)) else float(v)

        arrays = {k: dec(payload[k]) for k in _JET_FIELDS if k in payload}
        return cls(n, **arrays, conformal_normalized=bool(payload.get("conformal_normalized", False)),
                   strict=strict)

    # -- random jets (floating) satisfying every linear constraint we encode
    @classmethod
    def random(cls, n: int, rng: np.random.Generator, *, normalized: bool = True,
               terms: Iterable[str] | None = None) -> MetricJet:
        keep = set(_JET_FIELDS) if terms is None else set(terms)
        data = {}
        for name, rank in _JET_FIELDS.items():
            if name not in keep:
                continue
            raw = rng.standard_normal((n,) * rank)
            data[name] = _project(raw, _constraints(name, n, normalized))
        jet = cls(n, **data, conformal_normalized=normalized)
        if normalized and "R_N" in keep:
            # fix the trace of R_iNjN to -|II|^2 along the identity direction
            ii = np.array(jet.II, dtype=float)
            rn = np.array(jet.R_N, dtype=float)
            rn += (-(ii**2).sum() - np.trace(rn)) / n * np.eye(n)
            jet = cls(n, **{**{k: getattr(jet, k) for k in _JET_FIELDS}, "R_N": rn},
                      conformal_normalized=True)
        return jet


def _constraints(name: str, n: int, normalized: bool) -> list[np.ndarray]:
    """Linear constraints on the flattened tensor, as rows."""
    rank = _JET_FIELDS[name]
    shape = (n,) * rank
    rows: list[np.ndarray] = []

    def row(*pairs: tuple[tuple[int, ...], float]) -> None:
        v = np.zeros(shape)
        for idx, c in pairs:
            v[idx] += c
        if np.any(v):
            rows.append(v.ravel())

    r = range(n)
    idx_all = list(itertools.product(r, repeat=rank))
    if name in ("II", "R_N", "dNR_N"):
        for i, j in idx_all:
            row(((i, j), 1), ((j, i), -1))
    if name in ("dII", "dR_N"):
        for i, j, k in idx_all:
            row(((i, j, k), 1), ((j, i, k), -1))
    if name == "ddII":
        for i, j, k, l in idx_all:
            row(((i, j, k, l), 1), ((j, i, k, l), -1))
            row(((i, j, k, l), 1), ((i, j, l, k), -1))
    if name in ("R_h", "dR_h"):
        tail = (slice(None),) if name == "dR_h" else ()
        for i, k, j, l in itertools.product(r, repeat=4):
            for m in (range(n) if tail else [None]):
                ext = (m,) if m is not None else ()
                row(((i, k, j, l, *ext), 1), ((k, i, j, l, *ext), 1))
                row(((i, k, j, l, *ext), 1), ((i, k, l, j, *ext), 1))
                row(((i, k, j, l, *ext), 1), ((j, l, i, k, *ext), -1))
                row(((i, k, j, l, *ext), 1), ((i, j, l, k, *ext), 1), ((i, l, k, j, *ext), 1))
    if normalized:
        if name in ("II", "dNR_N"):
            row(*[((i, i), 1.0) for i in r])
        if name in ("dII", "dR_N"):
            for k in r:
                row(*[((i, i, k), 1.0) for i in r])
        if name == "ddII":
            for k in r:
                for l in r:
                    row(*[((i, i, k, l), 1.0) for i in r])
        if name == "R_h":
            for i in r:
                for j in r:
                    row(*[((i, k, j, k), 1.0) for k in r])
        if name == "dR_h":
            for i, j, m in itertools.product(r, repeat=3):
                row(*[((i, k, j, k, m), 1.0) for k in r])
            for i, j in itertools.product(r, repeat=2):
                for k, l, m in itertools.combinations_with_replacement(r, 3):
                    perms = set(itertools.permutations((k, l, m)))
                    row(*[((i, a, j, b, c), 1.0) for a, b, c in perms])
    return rows


def _project(raw: np.ndarray, rows: list[np.ndarray]) -> np.ndarray:
    if not rows:
        return raw
    A = np.array(rows)
    # orthogonal projection onto the null space of A, via the Gram matrix
    w, V = np.linalg.eigh(A.T @ A)
    basis = V[:, w <= 1e-9 * w.max()]
    v = basis @ (basis.T @ raw.ravel())
    return v.reshape(raw.shape)


def metric_jet_polynomials(jet: MetricJet) -> dict[tuple[int, int], Poly]:
    """Exact polynomial coefficients of ``A_ij(x)`` for tangential ``i <= j``.

    ``A_iN`` and ``A_NN`` vanish identically and are not stored.
    """
    n, N = jet.n, jet.n + 1
    t = n  # index of the normal coordinate x_N
    II, dII, ddII = jet.II, jet.dII, jet.ddII
    Rh, dRh, RN, dRN, dNRN = jet.R_h, jet.dR_h, jet.R_N, jet.dR_N, jet.dNR_N
    r = range(n)
    third, sixth = Fraction(1, 3), Fraction(1, 6)

    def sym(f: Any, i: int, j: int) -> Any:
        return (f(i, j) + f(j, i)) / 2

    out: dict[tuple[int, int], Poly] = {}
    for i in r:
        for j in range(i, n):
            p: Poly = {}
            _padd(p, _mono(N, t), -2 * II[i, j])
            for k in r:
                for l in r:
                    _padd(p, _mono(N, k, l), -third * Rh[i, k, j, l])
            for k in r:
                _padd(p, _mono(N, k, t), -2 * dII[i, j, k])
            _padd(p, _mono(N, t, t), -RN[i, j] + sum(II[i, s] * II[s, j] for s in r))
            for k, l, m in itertools.product(r, repeat=3):
                _padd(p, _mono(N, k, l, m), -sixth * dRh[i, k, j, l, m])
            for k in r:
                for l in r:
                    c = -ddII[i, j, k, l] + Fraction(2, 3) * sym(
                        lambda a, b, k=k, l=l: sum(Rh[a, k, s, l] * II[s, b] for s in r), i, j)
                    _padd(p, _mono(N, k, l, t), c)
            for k in r:
                c = -dRN[i, j, k] + 2 * sym(lambda a, b, k=k: sum(dII[a, s, k] * II[s, b] for s in r), i, j)
                _padd(p, _mono(N, k, t, t), c)
            c = sixth * (-2 * dNRN[i, j] + 8 * sym(lambda a, b: sum(II[a, s] * RN[b, s] for s in r), i, j))
            _padd(p, _mono(N, t, t, t), c)
            out[(i, j)] = p
    return out


def metric_jet_A(jet: MetricJet, x: Any) -> np.ndarray:
    """Evaluate the symmetric ``N x N`` matrix ``A(x)`` at one or many points."""
    x = np.asarray(x, dtype=float)
    N = jet.dim
    if x.shape[-1] != N:
        raise ValueError(f"points must have {N} coordinates")
    A = np.zeros(x.shape[:-1] + (N, N))
    for (i, j), p in metric_jet_polynomials(jet).items():
        v = poly_eval(p, x)
        A[..., i, j] = v
        A[..., j, i] = v
    return A

