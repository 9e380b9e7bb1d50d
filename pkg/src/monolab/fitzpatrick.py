"""Fitzpatrick functions of sampled graphs, their conjugates, and classification.

Points of X x X* are stored as rows ``(x, x*)`` of length ``2d``.  The
conjugate uses the pairing ``<(y, y*), (x, x*)> = <x*, y> + <y*, x>``, so
the variable ``y_i`` is dual to ``x*_i`` and ``y*_i`` is dual to ``x_i``.

On a rectangular grid the conjugate separates into one max-plus transform
per axis (each ``O(n_axis)`` per output node); the quadratic brute-force
version is kept for cross-checks.  For finite graphs the exact conjugate at
arbitrary points is a small linear program.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import AllInfinite, DimensionError, EmptyGraph
from .operators import (DEFAULT_TOL, DualPair, MonotoneCheck, SampledGraph, ToleranceConfig,
                        graph_monotone_check)


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Axes 0..d-1 discretize x, axes d..2d-1 discretize x*."""

    lo: np.ndarray
    hi: np.ndarray
    counts: tuple

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        counts = tuple(int(c) for c in np.ravel(self.counts))
        if lo.size != hi.size or lo.size != len(counts) or lo.size % 2 or lo.size == 0:
            raise DimensionError("grid needs matching bounds and counts for 2d axes")
        if not np.all(np.isfinite(lo) & np.isfinite(hi)) or np.any(lo >= hi):
            raise ValueError("grid bounds need lo < hi on every axis")
        if min(counts) < 3:
            raise ValueError("grid needs at least 3 points per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)
        for a, axis in enumerate(self.axes):
            if lo[a] < 0 < hi[a] and not np.any(axis == 0.0):
                raise ValueError(f"axis {a} straddles 0 but has no node at the origin")

    @classmethod
    def from_step(cls, x_bounds, xs_bounds, step: float, dim: int = 1) -> GridSpec:
        """Same spacing on every axis; bounds given as (lo, hi) for the x and x* blocks."""
        lo = [x_bounds[0]] * dim + [xs_bounds[0]] * dim
        hi = [x_bounds[1]] * dim + [xs_bounds[1]] * dim
        counts = [int(round((h - l) / step)) + 1 for l, h in zip(lo, hi)]
        return cls(lo, hi, counts)

    @property
    def dim(self) -> int:
        return self.lo.size // 2

    @property
    def shape(self) -> tuple:
        return self.counts

    @cached_property
    def axes(self) -> list:
        out = []
        for l, h, n in zip(self.lo, self.hi, self.counts):
            a = l + (h - l) * np.arange(n) / (n - 1)
            a[-1] = h
            a[np.abs(a) <= 1e-12 * (h - l)] = 0.0
            a.setflags(write=False)
            out.append(a)
        return out

    @property
    def steps(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.counts) - 1)

    @property
    def step(self) -> float:
        return float(self.steps.max())

    @cached_property
    def nodes(self) -> np.ndarray:
        """All nodes as a (G, 2d) array in C order of ``shape``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=1)
        out.setflags(write=False)
        return out

    def interior_nodes(self, margin: float) -> np.ndarray:
        """Nodes at least ``margin`` away from every face of the box."""
        nodes = self.nodes
        keep = np.all((nodes >= self.lo + margin - 1e-12) & (nodes <= self.hi - margin + 1e-12), axis=1)
        return nodes[keep]

    @cached_property
    def pairing(self) -> np.ndarray:
        """<x*, x> at every node, shaped like the grid."""
        n = self.nodes
        d = self.dim
        return np.einsum("ij,ij->i", n[:, :d], n[:, d:]).reshape(self.shape)

    def contains(self, pts, slack: float = 1e-12) -> bool:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2 * self.dim)
        return bool(np.all(pts >= self.lo - slack) and np.all(pts <= self.hi + slack))

    def refined(self, factor: int = 2) -> GridSpec:
        return GridSpec(self.lo, self.hi, [(n - 1) * factor + 1 for n in self.counts])

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "counts": list(self.counts)}


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if np.any(np.isnan(v)) or np.any(np.isneginf(v)):
            raise ValueError("fields take values in (-inf, +inf]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def rows(self):
        """(node coordinates, value) pairs in node order."""
        return zip(self.grid.nodes, self.flat())


# ------------------------------------------------------------- Fitzpatrick


def fitzpatrick_eval_batch(g: SampledGraph, P) -> np.ndarray:
    """phi_g at each row (x, x*) of P."""
    if len(g) == 0:
        raise EmptyGraph("Fitzpatrick function of an empty graph is identically -inf")
    P = np.asarray(P, dtype=float).reshape(-1, 2 * g.dim)
    d = g.dim
    return kernels.fitzpatrick_values(P[:, :d], P[:, d:], g.x, g.xstar)


def fitzpatrick_eval(g: SampledGraph, p: DualPair) -> float:
    """max over (y, y*) in g of <y*, x> - <y*, y> + <x*, y>."""
    if p.dim != g.dim:
        raise DimensionError(f"pair of dimension {p.dim} against a graph of dimension {g.dim}")
    return float(fitzpatrick_eval_batch(g, np.concatenate([p.x, p.xstar]))[0])


def fitzpatrick_field(g: SampledGraph, grid: GridSpec) -> ScalarField:
    if g.dim != grid.dim:
        raise DimensionError("graph and grid dimensions differ")
    return ScalarField(grid, fitzpatrick_eval_batch(g, grid.nodes))


# ---------------------------------------------------------------- conjugates


def _dual_axis(a: int, d: int) -> int:
    return a + d if a < d else a - d


def conjugate_field(f: ScalarField, method: str = "lines") -> ScalarField:
    """Discrete conjugate of f over its grid nodes, evaluated at the same nodes."""
    vals = f.values
    if not np.any(np.isfinite(vals)):
        raise AllInfinite("conjugate of an identically +inf field")
    grid = f.grid
    d = grid.dim
    if method == "brute":
        n = grid.nodes
        out = kernels.conjugate_bruteforce(n[:, :d], n[:, d:], vals.ravel(), n[:, :d], n[:, d:])
        return ScalarField(grid, out)
    if method != "lines":
        raise ValueError(f"unknown conjugation method {method!r}")
    h = -vals
    axes = grid.axes
    for a in range(2 * d):
        moved = np.moveaxis(h, a, -1)
        lead = moved.shape[:-1]
        target = axes[_dual_axis(a, d)]
        out = kernels.maxplus_lines(moved.reshape(-1, moved.shape[-1]), axes[a], target)
        h = np.moveaxis(out.reshape(lead + (target.size,)), -1, a)
    # position a now indexes the dual coordinate of axis a; swap the two blocks back
    h = np.transpose(h, [_dual_axis(a, d) for a in range(2 * d)])
    return ScalarField(grid, h)


def finite_graph_conjugate(g: SampledGraph, P) -> np.ndarray:
    """Exact phi_g* at rows of P by linear programming.

    phi_g is the maximum of the affine forms q -> <(s, s*), q> - <s*, s>, so
    phi_g*(p) = min sum_i t_i <s_i*, s_i> over the simplex subject to
    sum_i t_i (s_i, s_i*) = p, and +inf when p lies outside the convex hull.
    """
    if len(g) == 0:
        raise EmptyGraph("conjugate of an empty graph's Fitzpatrick function is undefined here")
    P = np.asarray(P, dtype=float).reshape(-1, 2 * g.dim)
    S = g.points
    cost = np.einsum("ij,ij->i", g.x, g.xstar)
    A_eq = np.vstack([S.T, np.ones((1, len(g)))])
    out = np.empty(P.shape[0])
    for k, p in enumerate(P):
        res = linprog(cost, A_eq=A_eq, b_eq=np.append(p, 1.0), bounds=(0, None), method="highs")
        out[k] = res.fun if res.status == 0 else np.inf
    return out


# ------------------------------------------------------- F-class and L-set


@dataclass(frozen=True, eq=False)
class FCheck:
    ok: bool
    worst_node: np.ndarray
    worst_gap: float


def in_F_class(f: ScalarField, tol: ToleranceConfig = DEFAULT_TOL) -> FCheck:
    """Whether f >= <x*, x> - eps_rep at every node; reports the most violated node."""
    gap = f.values - f.grid.pairing
    k = int(np.argmin(gap))
    worst = float(gap.ravel()[k])
    return FCheck(worst >= -tol.eps_rep, f.grid.nodes[k].copy(), worst)


def L_set(f: ScalarField, tol: ToleranceConfig = DEFAULT_TOL) -> SampledGraph:
    """Nodes where f <= <x*, x> + eps_rep."""
    mask = (f.values <= f.grid.pairing + tol.eps_rep).ravel()
    pts = f.grid.nodes[mask]
    d = f.grid.dim
    return SampledGraph(d, pts[:, :d], pts[:, d:])


# ---------------------------------------------------------- classification


@dataclass(frozen=True, eq=False)
class Classification:
    is_monotone: bool
    is_representable: bool
    is_maximal: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"is_monotone": self.is_monotone, "is_representable": self.is_representable,
                "is_maximal": self.is_maximal, "evidence": self.evidence}


def classify(g: SampledGraph, grid: GridSpec, tol: ToleranceConfig = DEFAULT_TOL) -> Classification:
    """Monotone / representable / maximal verdicts for a sampled graph at grid resolution.

    Representability asks that the conjugate lie in F and that L(phi*) match
    the sample within two grid steps (two-sided Hausdorff distance).  This
    certifies set equality at the resolution of the grid only.
    """
    if len(g) == 0:
        raise EmptyGraph("classification needs a nonempty sample")
    if g.dim != grid.dim:
        raise DimensionError("graph and grid dimensions differ")
    if not grid.contains(g.points):
        raise ValueError("graph sample lies outside the grid bounds")
    mono: MonotoneCheck = graph_monotone_check(g, tol)
    evidence = {"monotone_gap": mono.worst_gap, "grid_step": grid.step}
    if not mono.is_monotone:
        return Classification(False, False, False, evidence)
    phi = fitzpatrick_field(g, grid)
    phi_star = conjugate_field(phi)
    conj_F = in_F_class(phi_star, tol)
    phi_F = in_F_class(phi, tol)
    L = L_set(phi_star, tol)
    dist = kernels.hausdorff(g.points, L.points) if len(L) else float("inf")
    representable = conj_F.ok and dist <= 2 * grid.step
    evidence.update({
        "conjugate_F_gap": conj_F.worst_gap,
        "fitzpatrick_F_gap": phi_F.worst_gap,
        "fitzpatrick_F_witness": phi_F.worst_node.tolist(),
        "L_size": len(L),
        "hausdorff_to_L": dist,
    })
    return Classification(True, representable, representable and phi_F.ok, evidence)
