"""Closed-form value sets returned by pointwise operator evaluation.

Only the shapes that built-in operators actually produce are modelled:
empty, a point, an axis-aligned box (possibly unbounded), the whole space,
an affine subspace, a box plus a subspace, a ray and a Euclidean ball.
Anything else comes back as :class:`Unsupported`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear


def _vec(a):
    v = np.array(a, dtype=np.float64).ravel()
    v.setflags(write=False)
    return v


class ValueSet:
    dim: int

    def contains(self, p, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def translate(self, v) -> ValueSet:
        return Unsupported(self.dim, "translation")

    @property
    def kind(self) -> str:
        return type(self).__name__.lower()

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class EmptySet(ValueSet):
    dim: int

    def contains(self, p, tol=1e-9):
        return False

    def translate(self, v):
        return self

    def to_dict(self):
        return {"kind": "empty"}


@dataclass(frozen=True, eq=False)
class Unsupported(ValueSet):
    dim: int
    reason: str = ""

    def contains(self, p, tol=1e-9):
        raise ValueError(f"membership undecidable for unsupported value set ({self.reason})")

    def to_dict(self):
        return {"kind": "unsupported", "reason": self.reason}


@dataclass(frozen=True, eq=False)
class AllSpace(ValueSet):
    dim: int

    def contains(self, p, tol=1e-9):
        return True

    def translate(self, v):
        return self

    def to_dict(self):
        return {"kind": "all"}


@dataclass(frozen=True, eq=False)
class Singleton(ValueSet):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point))

    @property
    def dim(self):
        return self.point.size

    def contains(self, p, tol=1e-9):
        return bool(np.linalg.norm(np.asarray(p, dtype=float) - self.point) <= tol)

    def translate(self, v):
        return Singleton(self.point + v)

    def to_dict(self):
        return {"kind": "singleton", "point": self.point.tolist()}


@dataclass(frozen=True, eq=False)
class Box(ValueSet):
    """Product of closed intervals; bounds may be infinite."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ValueError("box needs lo <= hi componentwise")

    @property
    def dim(self):
        return self.lo.size

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def translate(self, v):
        return Box(self.lo + v, self.hi + v)

    def to_dict(self):
        return {"kind": "box", "lo": _listf(self.lo), "hi": _listf(self.hi)}


@dataclass(frozen=True, eq=False)
class Affine(ValueSet):
    """offset + span of the (orthonormal) rows of ``basis``."""

    offset: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offset", _vec(self.offset))
        b = np.array(self.basis, dtype=np.float64).reshape(-1, self.offset.size)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.offset.size

    def contains(self, p, tol=1e-9):
        r = np.asarray(p, dtype=float) - self.offset
        r = r - self.basis.T @ (self.basis @ r)
        return bool(np.linalg.norm(r) <= tol)

    def translate(self, v):
        return Affine(self.offset + v, self.basis)

    def to_dict(self):
        return {"kind": "affine", "offset": self.offset.tolist(), "basis": self.basis.tolist()}


@dataclass(frozen=True, eq=False)
class Prism(ValueSet):
    """[lo, hi] + span of the (orthonormal) rows of ``basis``."""

    lo: np.ndarray
    hi: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        b = np.array(self.basis, dtype=np.float64).reshape(-1, self.lo.size)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.lo.size

    def contains(self, p, tol=1e-9):
        # p = u + V^T t with u in the box: bounded least squares in (u, t)
        p = np.asarray(p, dtype=float)
        free = self.lo < self.hi
        k = self.basis.shape[0]
        rhs = p - np.where(free, 0.0, self.lo)
        A = np.hstack([np.eye(self.dim)[:, free], self.basis.T])
        lb = np.concatenate([self.lo[free], np.full(k, -np.inf)])
        ub = np.concatenate([self.hi[free], np.full(k, np.inf)])
        res = lsq_linear(A, rhs, bounds=(lb, ub), method="bvls")
        return bool(np.linalg.norm(A @ res.x - rhs) <= tol * max(1.0, np.abs(p).max()))

    def translate(self, v):
        return Prism(self.lo + v, self.hi + v, self.basis)

    def to_dict(self):
        return {"kind": "prism", "lo": _listf(self.lo), "hi": _listf(self.hi), "basis": self.basis.tolist()}


@dataclass(frozen=True, eq=False)
class Ray(ValueSet):
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec(self.origin))
        object.__setattr__(self, "direction", _vec(self.direction))

    @property
    def dim(self):
        return self.origin.size

    def contains(self, p, tol=1e-9):
        r = np.asarray(p, dtype=float) - self.origin
        t = max(0.0, float(r @ self.direction) / float(self.direction @ self.direction))
        return bool(np.linalg.norm(r - t * self.direction) <= tol)

    def translate(self, v):
        return Ray(self.origin + v, self.direction)

    def to_dict(self):
        return {"kind": "ray", "origin": self.origin.tolist(), "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class Ball(ValueSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))

    @property
    def dim(self):
        return self.center.size

    def contains(self, p, tol=1e-9):
        return bool(np.linalg.norm(np.asarray(p, dtype=float) - self.center) <= self.radius + tol)

    def translate(self, v):
        return Ball(self.center + v, self.radius)

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


def _listf(a):
    return [float(v) if np.isfinite(v) else ("inf" if v > 0 else "-inf") for v in a]


def box(lo, hi) -> ValueSet:
    """Normalising box constructor: degenerate boxes become points, full boxes the space."""
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    if np.array_equal(lo, hi):
        return Singleton(lo)
    if np.all(np.isneginf(lo)) and np.all(np.isposinf(hi)):
        return AllSpace(lo.size)
    return Box(lo, hi)


def affine(offset, rows) -> ValueSet:
    """Normalising affine-set constructor (orthonormalises and drops dependent rows)."""
    offset = np.asarray(offset, dtype=float).ravel()
    rows = np.asarray(rows, dtype=float).reshape(-1, offset.size)
    if rows.shape[0] == 0:
        return Singleton(offset)
    _, sv, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv.max())))
    if rank == 0:
        return Singleton(offset)
    if rank == offset.size:
        return AllSpace(offset.size)
    basis = vt[:rank]
    # canonical offset: the point of the subspace closest to the origin
    offset = offset - basis.T @ (basis @ offset)
    return Affine(offset, basis)


def _as_box(s):
    if isinstance(s, Singleton):
        return s.point, s.point
    if isinstance(s, Box):
        return s.lo, s.hi
    if isinstance(s, AllSpace):
        return np.full(s.dim, -np.inf), np.full(s.dim, np.inf)
    return None


def minkowski(a: ValueSet, b: ValueSet) -> ValueSet:
    """Pointwise sum {u + v : u in a, v in b}."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch in Minkowski sum: {a.dim} vs {b.dim}")
    if isinstance(a, EmptySet) or isinstance(b, EmptySet):
        return EmptySet(a.dim)
    if isinstance(a, Unsupported) or isinstance(b, Unsupported):
        return Unsupported(a.dim, "operand unsupported")
    if isinstance(a, AllSpace) or isinstance(b, AllSpace):
        return AllSpace(a.dim)
    if isinstance(a, Singleton):
        return b.translate(a.point)
    if isinstance(b, Singleton):
        return a.translate(b.point)
    ba, bb = _as_box(a), _as_box(b)
    if ba is not None and bb is not None:
        with np.errstate(invalid="ignore"):
            return box(ba[0] + bb[0], ba[1] + bb[1])
    if isinstance(a, Affine) and isinstance(b, Affine):
        return affine(a.offset + b.offset, np.vstack([a.basis, b.basis]))
    if isinstance(a, Ball) and isinstance(b, Ball):
        return Ball(a.center + b.center, a.radius + b.radius)
    if isinstance(a, Affine) and bb is not None:
        a, b, ba = b, a, bb
    if ba is not None and isinstance(b, Affine):
        with np.errstate(invalid="ignore"):
            return Prism(ba[0] + b.offset, ba[1] + b.offset, b.basis)
    return Unsupported(a.dim, f"{a.kind} + {b.kind}")


def linear_image(M, s: ValueSet) -> ValueSet:
    """Image {M u : u in s} under the matrix M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    e, d = M.shape
    if d != s.dim:
        raise ValueError(f"matrix with {d} columns applied to a {s.dim}-dimensional set")
    if isinstance(s, EmptySet):
        return EmptySet(e)
    if isinstance(s, Unsupported):
        return Unsupported(e, s.reason)
    if isinstance(s, Singleton):
        return Singleton(M @ s.point)
    if isinstance(s, AllSpace):
        return affine(np.zeros(e), M.T)
    if isinstance(s, Affine):
        return affine(M @ s.offset, s.basis @ M.T)
    if isinstance(s, Ray):
        direction = M @ s.direction
        if not np.any(direction):
            return Singleton(M @ s.origin)
        return Ray(M @ s.origin, direction)
    if isinstance(s, Box):
        finite = np.isfinite(s.lo) & np.isfinite(s.hi)
        if np.all(~finite & np.isneginf(s.lo) & np.isposinf(s.hi)):
            return affine(np.zeros(e), M.T)
        if np.count_nonzero(M - np.diag(np.diag(M))) == 0 and e == d:
            diag = np.diag(M)
            with np.errstate(invalid="ignore"):
                ends = np.stack([diag * s.lo, diag * s.hi])
            ends = np.where(diag == 0, 0.0, ends)
            return box(ends.min(axis=0), ends.max(axis=0))
    if isinstance(s, Ball) and e == d:
        c = M[0, 0]
        if np.allclose(M, c * np.eye(d)):
            return Ball(M @ s.center, abs(c) * s.radius)
    return Unsupported(e, f"image of {s.kind}")


def product(a: ValueSet, b: ValueSet) -> ValueSet:
    """Cartesian product a x b."""
    dim = a.dim + b.dim
    if isinstance(a, EmptySet) or isinstance(b, EmptySet):
        return EmptySet(dim)
    if isinstance(a, Unsupported) or isinstance(b, Unsupported):
        return Unsupported(dim, "factor unsupported")
    ba, bb = _as_box(a), _as_box(b)
    if ba is not None and bb is not None:
        return box(np.concatenate([ba[0], bb[0]]), np.concatenate([ba[1], bb[1]]))
    if isinstance(a, Singleton) and isinstance(b, Affine):
        rows = np.hstack([np.zeros((b.basis.shape[0], a.dim)), b.basis])
        return affine(np.concatenate([a.point, b.offset]), rows)
    if isinstance(a, Singleton) and isinstance(b, Ray):
        return Ray(np.concatenate([a.point, b.origin]),
                   np.concatenate([np.zeros(a.dim), b.direction]))
    return Unsupported(dim, f"{a.kind} x {b.kind}")
