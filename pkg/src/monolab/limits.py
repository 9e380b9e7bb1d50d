"""Graph liminf / limsup membership through resolvent probes.

For a pair (x, x*) and a sequence T_n, let x_n be the unit resolvent of T_n
at x + x*, so that (x_n, x + x* - x_n) lies on the graph of T_n.  The pair
belongs to liminf T_n exactly when x_n -> x; the same points, read as graph
samples, give the limsup distance.  Everything here is finite evidence: a
horizon N stands in for n -> infinity.

All probes are batched over candidate pairs and stream one resolvent solve
per index.  Huge horizons can be subsampled with ``max_points``; the plan
keeps a geometric head and a dense uniform tail over [N/2, N], which is all
the verdict rules look at.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from typing import Callable

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .errors import DimensionError, EmptyGraph, NotResolvable
from .fitzpatrick import Classification, GridSpec, classify
from .operators import (DEFAULT_TOL, BoxSet, DualPair, Linear, NormalCone, OperatorSpec, SampledGraph,
                        ShiftedPower, SingletonSet, Subdifferential, ToleranceConfig, polar_gap)
from .resolvent import resolvent_batch

DEFAULT_HORIZON = 10**4


class Status(str, Enum):
    MEMBER = "member"
    NON_MEMBER = "non_member"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class OperatorSequence:
    generator: Callable[[int], OperatorSpec]
    description: str
    dim: int
    max_index: int | None = None  # the generator is only meaningful up to here

    def __call__(self, n: int) -> OperatorSpec:
        spec = self.generator(n)
        if spec.dim != self.dim:
            raise DimensionError(f"term {n} of '{self.description}' has dimension {spec.dim}")
        return spec


@dataclass(frozen=True, eq=False)
class ConvergenceTrace:
    n: np.ndarray
    x: np.ndarray  # (K, d)
    residual: np.ndarray
    dist: np.ndarray

    def rows(self):
        for i in range(self.n.size):
            yield int(self.n[i]), self.x[i], float(self.residual[i]), float(self.dist[i])

    def __len__(self):
        return self.n.size


@dataclass(frozen=True, eq=False)
class MembershipVerdict:
    status: Status
    evidence: ConvergenceTrace
    certifying_sequence: str | None = None
    margins: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"status": self.status.value, "certifying_sequence": self.certifying_sequence,
                "margins": self.margins, "trace_length": len(self.evidence)}


def index_plan(horizon: int, max_points: int | None = None, max_index: int | None = None) -> np.ndarray:
    """Indices 1..N, or a subsample of at most ~max_points keeping the tail dense."""
    if int(horizon) != horizon or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    N = int(horizon) if max_index is None else min(int(horizon), int(max_index))
    if max_points is None or N <= max_points:
        return np.arange(1, N + 1)
    head = np.unique(np.geomspace(1, N / 2, max(2, max_points // 4)).astype(np.int64))
    tail = np.unique(np.linspace(N / 2, N, max_points - head.size).round().astype(np.int64))
    return np.unique(np.concatenate([head, tail]))


@dataclass(frozen=True, eq=False)
class ProbeRun:
    """Resolvent solutions for k candidate pairs along an index plan."""

    x: np.ndarray  # (k, d)
    xstar: np.ndarray
    n: np.ndarray  # (K,)
    sol: np.ndarray  # (K, k, d)
    residual: np.ndarray  # (K, k)
    horizon: int
    description: str
    failure: str | None = None

    @cached_property
    def dist(self) -> np.ndarray:
        return np.linalg.norm(self.sol - self.x[None], axis=2)

    def trace(self, j: int) -> ConvergenceTrace:
        # copies, so a trace does not pin the arrays of the whole run
        return ConvergenceTrace(self.n, self.sol[:, j].copy(), self.residual[:, j].copy(), self.dist[:, j].copy())


def _pairs_arrays(pairs, dim):
    if isinstance(pairs, DualPair):
        pairs = [pairs]
    if isinstance(pairs, SampledGraph):
        return pairs.x, pairs.xstar
    X = np.array([p.x for p in pairs], dtype=float).reshape(-1, dim)
    XS = np.array([p.xstar for p in pairs], dtype=float).reshape(-1, dim)
    return X, XS


def run_probes(seq: OperatorSequence, X, XS, horizon: int = DEFAULT_HORIZON,
               tol: ToleranceConfig = DEFAULT_TOL, max_points: int | None = None) -> ProbeRun:
    """Solve x* in (x_n - x) + T_n x_n for every row pair and every planned n."""
    X = np.asarray(X, dtype=float).reshape(-1, seq.dim)
    XS = np.asarray(XS, dtype=float).reshape(-1, seq.dim)
    if X.shape != XS.shape:
        raise DimensionError("x and x* blocks differ in shape")
    indices = index_plan(horizon, max_points, seq.max_index)
    W = X + XS
    sol = np.empty((indices.size,) + X.shape)
    res = np.empty((indices.size, X.shape[0]))
    failure = None
    done = indices.size
    previous = None
    for i, n in enumerate(indices):
        try:
            rep = resolvent_batch(seq(int(n)), 1.0, W, tol, guess=previous)
        except NotResolvable as exc:
            failure = f"term {n}: {exc}"
            done = i
            break
        sol[i] = rep.solution
        res[i] = rep.residual
        previous = rep.solution
    eff = int(indices[-1])
    return ProbeRun(X, XS, indices[:done], sol[:done], res[:done], eff, seq.description, failure)


# ----------------------------------------------------------------- verdicts


def _liminf_status(n, dist, N, eps):
    if n.size == 0:
        return Status.INCONCLUSIVE, {}
    tail = dist[n > 0.9 * N]
    if tail.size == 0:
        tail = dist[-1:]
    half = max(1, tail.size // 2)
    first, second = tail[:half], tail[half:] if tail.size > 1 else tail
    margins = {"tail_max": float(tail.max()), "tail_min": float(tail.min()),
               "eps_member": eps, "tail_points": int(tail.size)}
    if tail.max() <= eps and second.max() <= first.max() + 0.1 * eps:
        return Status.MEMBER, margins
    if first.max() >= 10 * eps and second.max() >= 10 * eps:
        return Status.NON_MEMBER, margins
    return Status.INCONCLUSIVE, margins


def _limsup_status(n, dist, N, eps, blocks=4, frequency=0.25):
    d = dist[n >= N / 2]
    if d.size == 0:
        return Status.INCONCLUSIVE, {}
    # hit frequencies use the liminf tail window, so liminf members are always limsup members
    tail = dist[n > 0.9 * N]
    if tail.size == 0:
        tail = dist[-1:]
    chunks = np.array_split(tail, min(blocks, tail.size))
    hits = [float(np.mean(c <= eps)) for c in chunks]
    margins = {"block_hit_rates": hits, "window_min": float(d.min()), "eps_member": eps}
    if min(hits) >= frequency:
        return Status.MEMBER, margins
    if d.min() > 10 * eps:
        return Status.NON_MEMBER, margins
    return Status.INCONCLUSIVE, margins


def _verdicts(run: ProbeRun, rule, eps) -> list:
    dist = run.dist
    out = []
    for j in range(run.x.shape[0]):
        if run.failure is not None:
            status, margins = Status.INCONCLUSIVE, {"failure": run.failure}
        else:
            status, margins = rule(run.n, dist[:, j], run.horizon, eps)
        cert = run.description if status is not Status.INCONCLUSIVE else None
        out.append(MembershipVerdict(status, run.trace(j), cert, margins))
    return out


def liminf_members(seq, pairs, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, max_points=None) -> list:
    X, XS = _pairs_arrays(pairs, seq.dim)
    run = run_probes(seq, X, XS, horizon, tol, max_points)
    return _verdicts(run, _liminf_status, tol.eps_member)


def liminf_member(seq: OperatorSequence, p: DualPair, horizon: int = DEFAULT_HORIZON,
                  tol: ToleranceConfig = DEFAULT_TOL, max_points: int | None = None) -> MembershipVerdict:
    """member when x_n stays within eps_member of x over the last tenth of the horizon."""
    return liminf_members(seq, [p], horizon, tol, max_points)[0]


def limsup_members(seq, pairs, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, max_points=None) -> list:
    X, XS = _pairs_arrays(pairs, seq.dim)
    run = run_probes(seq, X, XS, horizon, tol, max_points)
    return _verdicts(run, _limsup_status, tol.eps_member)


def limsup_member(seq: OperatorSequence, p: DualPair, horizon: int = DEFAULT_HORIZON,
                  tol: ToleranceConfig = DEFAULT_TOL, max_points: int | None = None) -> MembershipVerdict:
    """member when the graph of T_n passes within eps_member of p often in every block of [N/2, N].

    The graph point used at index n is (x_n, x + x* - x_n); its distance to
    p in the max-of-blocks norm is |x_n - x|.
    """
    return limsup_members(seq, [p], horizon, tol, max_points)[0]


def sample_liminf_graph(seq, candidates, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, max_points=None):
    """(accepted candidates as a SampledGraph, all verdicts)."""
    X, XS = _pairs_arrays(candidates, seq.dim)
    verdicts = liminf_members(seq, SampledGraph(seq.dim, X, XS), horizon, tol, max_points)
    mask = np.array([v.status is Status.MEMBER for v in verdicts], dtype=bool)
    return SampledGraph(seq.dim, X[mask], XS[mask]), verdicts


# ------------------------------------------------------ cluster certificate


@dataclass(frozen=True, eq=False)
class ClusterCheck:
    point: np.ndarray  # cluster point of x_n
    eta: np.ndarray  # its offset from x
    polar_gap: float  # min over the sample of <x* - eta - y*, point - y>
    inequality_slack: float  # lhs - rhs of the lemma inequality, worst sample
    ok: bool


@dataclass(frozen=True, eq=False)
class ClusterCertificate:
    bounded: bool
    max_norm: float
    clusters: tuple
    ok: bool
    trace: ConvergenceTrace

    def to_dict(self) -> dict:
        return {
            "bounded": self.bounded, "max_norm": self.max_norm, "ok": self.ok,
            "clusters": [{"point": c.point.tolist(), "eta": c.eta.tolist(), "polar_gap": c.polar_gap,
                          "inequality_slack": c.inequality_slack, "ok": c.ok} for c in self.clusters],
        }


def _tail_clusters(pts: np.ndarray, gap: float) -> list:
    """Indices of pts grouped by single linkage at the given gap, ordered by last occurrence."""
    if pts.shape[0] == 1:
        return [np.array([0])]
    keys, inverse = np.unique(np.round(pts / (gap / 10)), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    if keys.shape[0] == 1:
        labels = np.zeros(pts.shape[0], dtype=int)
    else:
        reps = np.array([pts[inverse == k][-1] for k in range(keys.shape[0])])
        key_labels = fcluster(linkage(reps, method="single"), t=gap, criterion="distance")
        labels = key_labels[inverse]
    groups = [np.flatnonzero(labels == lab) for lab in np.unique(labels)]
    return sorted(groups, key=lambda g: g[-1])


def cluster_certificate(seq: OperatorSequence, p: DualPair, liminf_samples: SampledGraph,
                        horizon: int = DEFAULT_HORIZON, tol: ToleranceConfig = DEFAULT_TOL,
                        max_points: int | None = None) -> ClusterCertificate:
    """Boundedness of x_n, and for every tail cluster point xb with eta = xb - x:
    (xb, x* - eta) is monotonically related to the sample, and
    <x* - eta - y*, xb - y> + <eta, xb - x> >= limsup |x_n - x|^2 on the cluster.
    """
    if len(liminf_samples) == 0:
        raise EmptyGraph("the certificate needs a nonempty liminf sample")
    run = run_probes(seq, p.x[None], p.xstar[None], horizon, tol, max_points)
    if run.failure is not None or run.n.size == 0:
        raise NotResolvable(run.failure or "empty index plan")
    trace = run.trace(0)
    X = trace.x
    norms = np.linalg.norm(X, axis=1)
    late = trace.n >= run.horizon / 2
    early_max = norms[~late].max() if np.any(~late) else norms[0]
    bounded = bool(np.all(np.isfinite(norms)) and norms[late].max() <= 1.01 * early_max + tol.eps_member)
    tail = X[late]
    checks = []
    for group in _tail_clusters(tail, 10 * tol.eps_member):
        xb = tail[group[-1]]
        eta = xb - p.x
        q = DualPair(xb, p.xstar - eta)
        gap = polar_gap(q, liminf_samples)
        sq = float(np.max(np.sum((tail[group] - p.x) ** 2, axis=1)))
        lhs = (np.einsum("ij,ij->i", (p.xstar - eta) - liminf_samples.xstar, xb - liminf_samples.x)
               + float(eta @ (xb - p.x)))
        slack = float(lhs.min() - sq)
        # slack absorbs the spread of the cluster itself
        spread = float(np.max(np.linalg.norm(tail[group] - xb, axis=1)))
        scale = 1.0 + np.abs(liminf_samples.points).max() + np.abs(xb).max() + np.abs(p.xstar).max()
        ok = gap >= -tol.eps_gap - 2 * spread * scale and slack >= -tol.eps_gap - 4 * spread * scale
        checks.append(ClusterCheck(xb, eta, gap, slack, bool(ok)))
    ok = bounded and all(c.ok for c in checks)
    return ClusterCertificate(bounded, float(norms.max()), tuple(checks), ok, trace)


# ------------------------------------------------------------- Mosco probe


@dataclass(frozen=True, eq=False)
class MoscoReport:
    is_mosco_limit: bool
    liminf_failures: list  # candidate points not accepted by the liminf probe
    limsup_outside: list  # limsup grid points not close to the candidate
    classification: Classification | None

    @property
    def is_maximal(self) -> bool:
        return self.classification is not None and self.classification.is_maximal

    def to_dict(self) -> dict:
        return {
            "is_mosco_limit": self.is_mosco_limit,
            "liminf_failures": [list(map(float, p)) for p in self.liminf_failures],
            "limsup_outside": [list(map(float, p)) for p in self.limsup_outside],
            "classification": None if self.classification is None else self.classification.to_dict(),
        }


def mosco_maximality_probe(seq: OperatorSequence, candidate: SampledGraph, grid: GridSpec,
                           horizon: int = DEFAULT_HORIZON, tol: ToleranceConfig = DEFAULT_TOL,
                           max_points: int | None = None) -> MoscoReport:
    """Is the candidate both inside the liminf and containing the (grid-detected) limsup?

    When it is, the candidate is classified on the grid and its maximality
    reported.  In finite dimension the weak and strong limits coincide.
    """
    if len(candidate) == 0:
        raise EmptyGraph("candidate graph is empty")
    if not grid.contains(candidate.points):
        raise ValueError("candidate lies outside the grid")
    inf_v = liminf_members(seq, candidate, horizon, tol, max_points)
    liminf_fail = [candidate.points[j] for j, v in enumerate(inf_v) if v.status is not Status.MEMBER]
    nodes = grid.nodes
    d = grid.dim
    sup_v = limsup_members(seq, SampledGraph(d, nodes[:, :d], nodes[:, d:]), horizon, tol, max_points)
    detected = np.array([v.status is Status.MEMBER for v in sup_v], dtype=bool)
    outside = []
    for node in nodes[detected]:
        if np.min(np.linalg.norm(candidate.points - node, axis=1)) > tol.eps_member:
            outside.append(node)
    is_limit = not liminf_fail and not outside
    cls = classify(candidate, grid, tol) if is_limit else None
    return MoscoReport(is_limit, liminf_fail, outside, cls)


# -------------------------------------------------------- built-in sequences


def alternating_sequence() -> OperatorSequence:
    """{0} x R for even n, R x {0} (the zero map) for odd n, on the real line."""
    even = NormalCone(SingletonSet([0.0]))
    odd = Linear([[0.0]])
    return OperatorSequence(lambda n: even if n % 2 == 0 else odd, "alternating {0}xR / Rx{0}", 1)


def constant_sequence(spec: OperatorSpec, description: str | None = None) -> OperatorSequence:
    return OperatorSequence(lambda n: spec, description or f"constant {type(spec).__name__}", spec.dim)


def shifted_quadratic_sequence() -> OperatorSequence:
    """Subdifferentials of f_n(x) = (x - 1/n)^2, converging to x -> 2x."""
    return OperatorSequence(lambda n: Subdifferential(ShiftedPower([1.0 / n], p=2, scale=2.0)),
                            "subdifferential of (x - 1/n)^2", 1)


def box_normal_sequence() -> OperatorSequence:
    """Normal cones of [-1/n, 1 + 1/n], converging to the normal cone of [0, 1]."""
    return OperatorSequence(lambda n: NormalCone(BoxSet([-1.0 / n], [1.0 + 1.0 / n])),
                            "normal cone of [-1/n, 1+1/n]", 1)
