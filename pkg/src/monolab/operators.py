"""Operator specifications on R^d and their pointwise calculus.

Operators are immutable descriptions.  Anything with a closed form can be
evaluated pointwise (:func:`op_eval`); everything else is reached through
resolvents in :mod:`monolab.resolvent`.  The ambient norm is Euclidean, so
the duality map is the identity.

Array conventions: a *vector* is a 1-D float64 array; batched inputs to
``project``/``prox``/``envelope_grad`` are ``(k, d)`` arrays, one row per
point.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, NotMonotoneError, UnsupportedValue
from .sets import (AllSpace, Ball, EmptySet, Singleton, Unsupported, ValueSet, affine, box,
                   linear_image, minkowski, product, Ray)


@dataclass(frozen=True)
class ToleranceConfig:
    eps_res: float = 1e-10
    eps_gap: float = 1e-9
    eps_member: float = 1e-4
    eps_rep: float = 1e-6
    slice_radius: float = 5.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"tolerance {f.name} must be finite and > 0, got {v!r}")

    def replace(self, **changes) -> ToleranceConfig:
        return dataclasses.replace(self, **changes)


DEFAULT_TOL = ToleranceConfig()


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.array(x, dtype=np.float64).ravel()
    if v.size == 0:
        raise DimensionError("vectors need at least one coordinate")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector has non-finite entries: {v}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected a vector of dimension {dim}, got {v.size}")
    v.setflags(write=False)
    return v


def as_matrix(m, shape=None) -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ValueError("matrix must be a finite 2-D array")
    if shape is not None and a.shape != shape:
        raise DimensionError(f"expected a {shape} matrix, got {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DualPair:
    x: np.ndarray
    xstar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "xstar", as_vector(self.xstar, self.x.size))

    @property
    def dim(self) -> int:
        return self.x.size

    def pairing(self) -> float:
        return float(self.xstar @ self.x)

    def as_tuple(self):
        return self.x.tolist(), self.xstar.tolist()


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """A finite sample of a graph in X x X*; rows of ``x`` pair with rows of ``xstar``."""

    dim: int
    x: np.ndarray = None
    xstar: np.ndarray = None

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("graph dimension must be >= 1")
        x = np.zeros((0, self.dim)) if self.x is None else np.array(self.x, dtype=np.float64)
        xs = np.zeros((0, self.dim)) if self.xstar is None else np.array(self.xstar, dtype=np.float64)
        x = x.reshape(-1, self.dim)
        xs = xs.reshape(-1, self.dim)
        if x.shape != xs.shape:
            raise DimensionError(f"graph arrays disagree: {x.shape} vs {xs.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xs))):
            raise ValueError("graph sample has non-finite entries")
        x.setflags(write=False)
        xs.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xstar", xs)

    @classmethod
    def from_pairs(cls, pairs: Sequence, dim: int | None = None) -> SampledGraph:
        pairs = [p if isinstance(p, DualPair) else DualPair(*p) for p in pairs]
        if dim is None:
            if not pairs:
                raise DimensionError("dimension required for an empty graph")
            dim = pairs[0].dim
        if any(p.dim != dim for p in pairs):
            raise DimensionError("all pairs in a graph must share one dimension")
        if not pairs:
            return cls(dim)
        return cls(dim, np.stack([p.x for p in pairs]), np.stack([p.xstar for p in pairs]))

    def __len__(self):
        return self.x.shape[0]

    @property
    def pairs(self) -> list[DualPair]:
        return [DualPair(a, b) for a, b in zip(self.x, self.xstar)]

    @property
    def points(self) -> np.ndarray:
        """Rows (x, x*) as one (m, 2d) array."""
        return np.hstack([self.x, self.xstar])

    def subset(self, mask) -> SampledGraph:
        return SampledGraph(self.dim, self.x[mask], self.xstar[mask])


# ---------------------------------------------------------------- convex sets


class ConvexSetSpec:
    dim: int

    def project(self, W: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def excess(self, W: np.ndarray) -> np.ndarray:
        """W - project(W), computed without cancellation where possible."""
        return W - self.project(W)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = as_vector(x, self.dim)
        return bool(np.linalg.norm(self.excess(x[None, :])[0]) <= tol)

    def normal_cone(self, x, tol: float = 1e-9) -> ValueSet:
        raise NotImplementedError

    def affine_basis(self):
        """(B, z0) with the set equal to {B y + z0}, or None if it is not affine."""
        return None


@dataclass(frozen=True, eq=False)
class SingletonSet(ConvexSetSpec):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_vector(self.point))

    @property
    def dim(self):
        return self.point.size

    def project(self, W):
        return np.broadcast_to(self.point, W.shape).copy()

    def excess(self, W):
        return W - self.point

    def normal_cone(self, x, tol=1e-9):
        if np.linalg.norm(as_vector(x, self.dim) - self.point) <= tol:
            return AllSpace(self.dim)
        return EmptySet(self.dim)

    def affine_basis(self):
        return np.zeros((self.dim, 0)), self.point


@dataclass(frozen=True, eq=False)
class BoxSet(ConvexSetSpec):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0 or np.any(lo > hi) or np.any(np.isnan(lo + hi)):
            raise ValueError("box set needs nonempty bounds with lo <= hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def project(self, W):
        return np.clip(W, self.lo, self.hi)

    def excess(self, W):
        return np.maximum(W - self.hi, 0.0) + np.minimum(W - self.lo, 0.0)

    def normal_cone(self, x, tol=1e-9):
        x = as_vector(x, self.dim)
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            return EmptySet(self.dim)
        at_lo = np.abs(x - self.lo) <= tol
        at_hi = np.abs(x - self.hi) <= tol
        lo = np.where(at_lo, -np.inf, 0.0)
        hi = np.where(at_hi, np.inf, 0.0)
        return box(lo, hi)

    def affine_basis(self):
        if np.array_equal(self.lo, self.hi):
            return np.zeros((self.dim, 0)), self.lo
        return None


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSetSpec):
    """{x : <normal, x> <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_vector(self.normal)
        if not np.any(a):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def excess(self, W):
        viol = np.maximum(W @ self.normal - self.offset, 0.0) / (self.normal @ self.normal)
        return viol[:, None] * self.normal

    def project(self, W):
        return W - self.excess(W)

    def normal_cone(self, x, tol=1e-9):
        s = float(as_vector(x, self.dim) @ self.normal) - self.offset
        if s > tol:
            return EmptySet(self.dim)
        if s < -tol:
            return Singleton(np.zeros(self.dim))
        return Ray(np.zeros(self.dim), self.normal)


@dataclass(frozen=True, eq=False)
class AffineGraph(ConvexSetSpec):
    """The graph {(y, A y)} of A : R^dY -> R^dX, a subspace of R^(dY + dX)."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix))

    @property
    def dim_y(self):
        return self.matrix.shape[1]

    @property
    def dim(self):
        return self.matrix.shape[0] + self.matrix.shape[1]

    @cached_property
    def _range_basis(self):
        return np.vstack([np.eye(self.dim_y), self.matrix])

    @cached_property
    def _complement_projector(self):
        A = self.matrix
        C = np.vstack([-A.T, np.eye(A.shape[0])])
        return C @ np.linalg.solve(np.eye(A.shape[0]) + A @ A.T, C.T)

    def excess(self, W):
        return W @ self._complement_projector.T

    def project(self, W):
        A = self.matrix
        u, v = W[:, : self.dim_y], W[:, self.dim_y:]
        y = np.linalg.solve(np.eye(self.dim_y) + A.T @ A, (u + v @ A).T).T
        return np.hstack([y, y @ A.T])

    def normal_cone(self, x, tol=1e-9):
        x = as_vector(x, self.dim)
        y, v = x[: self.dim_y], x[self.dim_y:]
        if np.linalg.norm(v - self.matrix @ y) > tol:
            return EmptySet(self.dim)
        # {(A^T t, -t) : t in R^dX}
        rows = np.hstack([self.matrix, -np.eye(self.matrix.shape[0])])
        return affine(np.zeros(self.dim), rows)

    def affine_basis(self):
        return self._range_basis, np.zeros(self.dim)


# ----------------------------------------------------------- convex functions


class ConvexFnSpec:
    dim: int

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, W: np.ndarray, lam: float) -> np.ndarray:
        raise NotImplementedError

    def envelope_grad(self, W: np.ndarray, lam: float) -> np.ndarray:
        """Gradient of the Moreau envelope, i.e. the Yosida regularization of the subdifferential."""
        return (W - self.prox(W, lam)) / lam

    def subdifferential(self, x, tol: float = 1e-9) -> ValueSet:
        raise NotImplementedError

    def affine_gradient(self):
        """(M, c) when the subdifferential is the affine map x -> M x + c, else None."""
        return None

    @property
    def smooth_lipschitz(self):
        """Lipschitz constant of the gradient when single valued, else None."""
        return None


@dataclass(frozen=True, eq=False)
class AbsValueSum(ConvexFnSpec):
    """f(x) = sum_i |x_i|."""

    dim: int = 1

    def value(self, x):
        return float(np.abs(as_vector(x, self.dim)).sum())

    def prox(self, W, lam):
        return np.sign(W) * np.maximum(np.abs(W) - lam, 0.0)

    def envelope_grad(self, W, lam):
        return np.clip(W / lam, -1.0, 1.0)

    def subdifferential(self, x, tol=1e-9):
        x = as_vector(x, self.dim)
        lo = np.where(x > tol, 1.0, -1.0)
        hi = np.where(x < -tol, -1.0, 1.0)
        return box(lo, hi)


@dataclass(frozen=True, eq=False)
class Quadratic(ConvexFnSpec):
    """f(x) = x^T Q x / 2 + b^T x with Q symmetric positive semidefinite."""

    Q: np.ndarray
    b: np.ndarray = None

    def __post_init__(self):
        Q = as_matrix(self.Q)
        if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T):
            raise ValueError("quadratic needs a symmetric matrix")
        if np.linalg.eigvalsh(Q).min() < -DEFAULT_TOL.eps_gap:
            raise NotMonotoneError("quadratic form is not convex")
        b = np.zeros(Q.shape[0]) if self.b is None else self.b
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", as_vector(b, Q.shape[0]))

    @property
    def dim(self):
        return self.Q.shape[0]

    def value(self, x):
        x = as_vector(x, self.dim)
        return float(0.5 * x @ self.Q @ x + self.b @ x)

    def prox(self, W, lam):
        H = np.eye(self.dim) + lam * self.Q
        return np.linalg.solve(H, (W - lam * self.b).T).T

    def envelope_grad(self, W, lam):
        H = np.eye(self.dim) + lam * self.Q
        return np.linalg.solve(H, (W @ self.Q.T + self.b).T).T

    def subdifferential(self, x, tol=1e-9):
        return Singleton(self.Q @ as_vector(x, self.dim) + self.b)

    def affine_gradient(self):
        return self.Q, self.b

    @property
    def smooth_lipschitz(self):
        return float(np.linalg.norm(self.Q, 2))


@dataclass(frozen=True, eq=False)
class IndicatorOf(ConvexFnSpec):
    set: ConvexSetSpec

    @property
    def dim(self):
        return self.set.dim

    def value(self, x):
        return 0.0 if self.set.contains(x) else np.inf

    def prox(self, W, lam):
        return self.set.project(W)

    def envelope_grad(self, W, lam):
        return self.set.excess(W) / lam

    def subdifferential(self, x, tol=1e-9):
        return self.set.normal_cone(x, tol)


@dataclass(frozen=True, eq=False)
class ShiftedPower(ConvexFnSpec):
    """f(x) = scale * |x - center|^p / p for p in {1, 2} (Euclidean norm)."""

    center: np.ndarray
    p: int = 2
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if self.p not in (1, 2):
            raise ValueError("power must be 1 or 2")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dim(self):
        return self.center.size

    def value(self, x):
        r = np.linalg.norm(as_vector(x, self.dim) - self.center)
        return float(self.scale * r ** self.p / self.p)

    def prox(self, W, lam):
        V = W - self.center
        if self.p == 2:
            return self.center + V / (1.0 + lam * self.scale)
        r = np.linalg.norm(V, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            shrink = np.where(r > lam * self.scale, 1.0 - lam * self.scale / r, 0.0)
        return self.center + shrink * V

    def envelope_grad(self, W, lam):
        V = W - self.center
        if self.p == 2:
            return self.scale * V / (1.0 + lam * self.scale)
        r = np.linalg.norm(V, axis=1, keepdims=True)
        inside = r <= lam * self.scale
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(inside, V / lam, self.scale * V / r)

    def subdifferential(self, x, tol=1e-9):
        v = as_vector(x, self.dim) - self.center
        if self.p == 2:
            return Singleton(self.scale * v)
        r = np.linalg.norm(v)
        if r > tol:
            return Singleton(self.scale * v / r)
        if self.dim == 1:
            return box([-self.scale], [self.scale])
        return Ball(np.zeros(self.dim), self.scale)

    def affine_gradient(self):
        if self.p == 2:
            return self.scale * np.eye(self.dim), -self.scale * self.center
        return None

    @property
    def smooth_lipschitz(self):
        return self.scale if self.p == 2 else None


# ------------------------------------------------------------ operator specs


class OperatorSpec:
    """Base class; subclasses are immutable and know their dimension."""

    dim: int

    def values(self, x, tol: ToleranceConfig = DEFAULT_TOL) -> ValueSet:
        return Unsupported(self.dim, f"{type(self).__name__} has no pointwise closed form")


@dataclass(frozen=True, eq=False)
class Zero(OperatorSpec):
    dim: int = 1

    def values(self, x, tol=DEFAULT_TOL):
        as_vector(x, self.dim)
        return Singleton(np.zeros(self.dim))


@dataclass(frozen=True, eq=False)
class Linear(OperatorSpec):
    """x -> M x, accepted only when (M + M^T)/2 is positive semidefinite."""

    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        M = as_matrix(self.matrix)
        if M.shape[0] != M.shape[1]:
            raise DimensionError(f"linear operator needs a square matrix, got {M.shape}")
        if self.check:
            lam_min = np.linalg.eigvalsh((M + M.T) / 2).min()
            if lam_min < -DEFAULT_TOL.eps_gap:
                raise NotMonotoneError(f"symmetric part has eigenvalue {lam_min:.3g} < 0")
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def values(self, x, tol=DEFAULT_TOL):
        return Singleton(self.matrix @ as_vector(x, self.dim))


@dataclass(frozen=True, eq=False)
class Subdifferential(OperatorSpec):
    fn: ConvexFnSpec

    @property
    def dim(self):
        return self.fn.dim

    def values(self, x, tol=DEFAULT_TOL):
        return self.fn.subdifferential(as_vector(x, self.dim), tol.eps_gap)


@dataclass(frozen=True, eq=False)
class NormalCone(OperatorSpec):
    set: ConvexSetSpec

    @property
    def dim(self):
        return self.set.dim

    def values(self, x, tol=DEFAULT_TOL):
        return self.set.normal_cone(as_vector(x, self.dim), tol.eps_gap)


@dataclass(frozen=True, eq=False)
class FiniteGraph(OperatorSpec):
    graph: SampledGraph

    @property
    def dim(self):
        return self.graph.dim

    def values(self, x, tol=DEFAULT_TOL):
        x = as_vector(x, self.dim)
        hits = np.linalg.norm(self.graph.x - x, axis=1) <= tol.eps_gap
        if not np.any(hits):
            return EmptySet(self.dim)
        vals = self.graph.xstar[hits]
        if np.all(np.abs(vals - vals[0]) <= tol.eps_gap):
            return Singleton(vals[0])
        return Unsupported(self.dim, "finite set of values")


@dataclass(frozen=True, eq=False)
class Yosida(OperatorSpec):
    inner: OperatorSpec
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"Yosida parameter must be > 0, got {self.lam!r}")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self):
        return self.inner.dim

    def values(self, x, tol=DEFAULT_TOL):
        from .resolvent import yosida_eval

        return Singleton(yosida_eval(self.inner, self.lam, x, tol))


@dataclass(frozen=True, eq=False)
class SumOf(OperatorSpec):
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("sum needs at least one operator")
        if len({p.dim for p in parts}) != 1:
            raise DimensionError("summands must share one dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return self.parts[0].dim

    def values(self, x, tol=DEFAULT_TOL):
        return reduce(minkowski, (p.values(x, tol) for p in self.parts))


@dataclass(frozen=True, eq=False)
class AdjointComposition(OperatorSpec):
    """y -> A^T T(A y) for A : R^dY -> R^dX and T on R^dX."""

    A: np.ndarray
    inner: OperatorSpec

    def __post_init__(self):
        A = as_matrix(self.A)
        if A.shape[0] != self.inner.dim:
            raise DimensionError(f"A has {A.shape[0]} rows but inner operator acts on R^{self.inner.dim}")
        object.__setattr__(self, "A", A)

    @property
    def dim(self):
        return self.A.shape[1]

    def values(self, x, tol=DEFAULT_TOL):
        y = as_vector(x, self.dim)
        return linear_image(self.A.T, self.inner.values(self.A @ y, tol))


@dataclass(frozen=True, eq=False)
class ProductLift(OperatorSpec):
    """(y, x) -> {0} x T x on R^dY x R^dX."""

    inner: OperatorSpec
    dim_y: int

    @property
    def dim(self):
        return self.dim_y + self.inner.dim

    def values(self, x, tol=DEFAULT_TOL):
        z = as_vector(x, self.dim)
        return product(Singleton(np.zeros(self.dim_y)), self.inner.values(z[self.dim_y:], tol))


@dataclass(frozen=True, eq=False)
class GraphNormalCone(OperatorSpec):
    """Normal cone to the graph of A : R^dY -> R^dX, acting on R^dY x R^dX."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", as_matrix(self.A))

    @cached_property
    def set(self) -> AffineGraph:
        return AffineGraph(self.A)

    @property
    def dim(self):
        return self.A.shape[0] + self.A.shape[1]

    def values(self, x, tol=DEFAULT_TOL):
        return self.set.normal_cone(as_vector(x, self.dim), tol.eps_gap)


# ---------------------------------------------------------------- operations


def duality_map(x) -> np.ndarray:
    """Duality mapping of Euclidean R^d: the identity."""
    return as_vector(x)


def op_eval(spec: OperatorSpec, x, tol: ToleranceConfig = DEFAULT_TOL) -> ValueSet:
    """Value set T x of ``spec`` at ``x``."""
    return spec.values(as_vector(x, spec.dim), tol)


def minkowski_sum_eval(T1: OperatorSpec, T2: OperatorSpec, x, tol: ToleranceConfig = DEFAULT_TOL) -> ValueSet:
    v1, v2 = op_eval(T1, x, tol), op_eval(T2, x, tol)
    for v, name in ((v1, "first"), (v2, "second")):
        if isinstance(v, Unsupported):
            raise UnsupportedValue(f"{name} operand has no closed-form value: {v.reason}")
    out = minkowski(v1, v2)
    if isinstance(out, Unsupported):
        raise UnsupportedValue(out.reason)
    return out


@dataclass(frozen=True, eq=False)
class MonotoneCheck:
    is_monotone: bool
    worst_pair: tuple | None
    worst_gap: float


def graph_monotone_check(g: SampledGraph, tol: ToleranceConfig = DEFAULT_TOL) -> MonotoneCheck:
    gap, i, j = kernels.pairwise_min_gap(g.x, g.xstar)
    if i < 0:
        return MonotoneCheck(True, None, float("inf"))
    pair = (DualPair(g.x[i], g.xstar[i]), DualPair(g.x[j], g.xstar[j]))
    return MonotoneCheck(gap >= -tol.eps_gap, pair, gap)


def polar_gap(p: DualPair, g: SampledGraph) -> float:
    """min over (y, y*) in g of <y* - x*, y - x>; +inf for an empty sample."""
    if p.dim != g.dim:
        raise DimensionError(f"pair of dimension {p.dim} against a graph of dimension {g.dim}")
    if len(g) == 0:
        return float("inf")
    return float(np.min(np.einsum("ij,ij->i", g.xstar - p.xstar, g.x - p.x)))


def polar_member(p: DualPair, g: SampledGraph, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Whether p is monotonically related to every point of g."""
    return polar_gap(p, g) >= -tol.eps_gap
