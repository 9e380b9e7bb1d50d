"""Variational sums and compositions as liminfs of regularized operators.

A variational sum intersects, over all admissible parameter sequences
(lam_n, mu_n) -> 0, the liminf of T1_(lam_n) + T2_(mu_n).  Only a finite
probe family can be run, so a non-member verdict from any single sequence
is a sound certificate while a member verdict is supported evidence only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotResolvable, UnsupportedValue
from .limits import DEFAULT_HORIZON, MembershipVerdict, OperatorSequence, Status, liminf_members
from .operators import (DEFAULT_TOL, AdjointComposition, DualPair, GraphNormalCone, OperatorSpec,
                        ProductLift, SampledGraph, SumOf, ToleranceConfig, Yosida, as_matrix, as_vector,
                        op_eval)
from .resolvent import direct_resolvent, affine_form, is_resolvable, subspace_constraint
from .sets import Unsupported, ValueSet, linear_image

ADMISSIBILITY_CHECK = 1000


@dataclass(frozen=True, eq=False)
class ParamSequence:
    """lam_n > 0 decreasing to 0."""

    generator: Callable[[int], float]
    description: str
    max_index: int | None = None

    def __post_init__(self):
        top = ADMISSIBILITY_CHECK if self.max_index is None else min(ADMISSIBILITY_CHECK, self.max_index)
        vals = np.array([self.generator(n) for n in range(1, top + 1)], dtype=float)
        if not (np.all(np.isfinite(vals)) and np.all(vals > 0) and np.all(np.diff(vals) <= 0)):
            raise ValueError(f"parameter sequence '{self.description}' must be positive and nonincreasing")
        if vals[-1] >= vals[0] and top > 1:
            raise ValueError(f"parameter sequence '{self.description}' does not decrease")

    def __call__(self, n: int) -> float:
        return float(self.generator(n))


@dataclass(frozen=True, eq=False)
class ParamSequencePair:
    """(lam_n, mu_n) with both >= 0, lam_n + mu_n > 0, both tending to 0."""

    generator: Callable[[int], tuple]
    description: str
    kind: str = "custom"  # symmetric | left | custom
    max_index: int | None = None

    def __post_init__(self):
        if self.kind not in ("symmetric", "left", "custom"):
            raise ValueError(f"unknown parameter-sequence class {self.kind!r}")
        top = ADMISSIBILITY_CHECK if self.max_index is None else min(ADMISSIBILITY_CHECK, self.max_index)
        vals = np.array([self.generator(n) for n in range(1, top + 1)], dtype=float).reshape(-1, 2)
        ok = np.all(np.isfinite(vals)) and np.all(vals >= 0) and np.all(vals.sum(axis=1) > 0)
        if not ok:
            raise ValueError(f"parameter pair '{self.description}' violates lam, mu >= 0, lam + mu > 0")
        for col in range(2 if self.kind != "left" else 1):
            c = vals[:, col]
            if np.any(c > 0) and c[-1] >= c[0]:
                raise ValueError(f"parameter pair '{self.description}' does not tend to 0")

    def __call__(self, n: int) -> tuple:
        lam, mu = self.generator(n)
        return float(lam), float(mu)


@dataclass(frozen=True, eq=False)
class ProbeFamily:
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a probe family needs at least one sequence")
        object.__setattr__(self, "members", members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def default_probe_family() -> ProbeFamily:
    return ProbeFamily((
        ParamSequencePair(lambda n: (1.0 / n, 1.0 / n), "lam=mu=1/n", "symmetric"),
        ParamSequencePair(lambda n: (1.0 / n**2, 1.0 / n), "lam=1/n^2, mu=1/n"),
        ParamSequencePair(lambda n: (1.0 / n, 1.0 / n**2), "lam=1/n, mu=1/n^2"),
        # 2^-n underflows the useful range of doubles past ~60 terms
        ParamSequencePair(lambda n: (2.0**-n, 2.0**-n), "lam=mu=2^-n", "symmetric", max_index=60),
    ))


def default_lambda_sequences() -> tuple:
    return (
        ParamSequence(lambda n: 1.0 / n, "lam=1/n"),
        ParamSequence(lambda n: 1.0 / n**2, "lam=1/n^2"),
        ParamSequence(lambda n: 2.0**-n, "lam=2^-n", max_index=60),
    )


# ----------------------------------------------------------- regularized sums


def _has_exact_prox(T: OperatorSpec) -> bool:
    return affine_form(T) is not None or subspace_constraint(T) is not None or direct_resolvent(T) is not None


def regularized_sum_spec(T1: OperatorSpec, T2: OperatorSpec, lam: float, mu: float) -> OperatorSpec:
    """T1_lam + T2_mu, leaving a side unregularized when its parameter is 0."""
    if lam < 0 or mu < 0 or not lam + mu > 0:
        raise ValueError(f"need lam, mu >= 0 with lam + mu > 0, got ({lam}, {mu})")
    parts = []
    for T, t in ((T1, lam), (T2, mu)):
        if t > 0:
            parts.append(Yosida(T, t))
        elif _has_exact_prox(T):
            parts.append(T)
        else:
            raise NotResolvable(f"unregularized {type(T).__name__} has no exact prox")
    spec = SumOf(tuple(parts))
    if not is_resolvable(spec):
        raise NotResolvable("regularized sum falls outside the resolvable class")
    return spec


def varsum_sequence(T1, T2, params: ParamSequencePair) -> OperatorSequence:
    return OperatorSequence(lambda n: regularized_sum_spec(T1, T2, *params(n)), params.description,
                            T1.dim, params.max_index)


def left_sum_sequence(T1, T2, params: ParamSequence) -> OperatorSequence:
    return OperatorSequence(lambda n: regularized_sum_spec(T1, T2, params(n), 0.0), params.description,
                            T1.dim, params.max_index)


def composition_sequence(T, A, params: ParamSequence) -> OperatorSequence:
    A = as_matrix(A)
    return OperatorSequence(lambda n: AdjointComposition(A, Yosida(T, params(n))), params.description,
                            A.shape[1], params.max_index)


# ------------------------------------------------------------- aggregation


@dataclass(frozen=True, eq=False)
class FamilyVerdict:
    """Per-sequence verdicts and their aggregate.

    The aggregate is non_member as soon as one sequence certifies it, member
    only when every sequence accepts (supported by the finite family, not
    proved), and inconclusive otherwise.
    """

    per_sequence: list
    aggregate: MembershipVerdict

    @property
    def status(self) -> Status:
        return self.aggregate.status

    def to_dict(self) -> dict:
        return {"aggregate": self.aggregate.to_dict(), "per_sequence": [v.to_dict() for v in self.per_sequence]}


def _aggregate(verdicts: list) -> MembershipVerdict:
    for v in verdicts:
        if v.status is Status.NON_MEMBER:
            return MembershipVerdict(Status.NON_MEMBER, v.evidence, v.certifying_sequence,
                                     {"certificate": "sound", **v.margins})
    if all(v.status is Status.MEMBER for v in verdicts):
        worst = max(verdicts, key=lambda v: v.margins.get("tail_max", 0.0))
        return MembershipVerdict(Status.MEMBER, worst.evidence, None,
                                 {"certificate": "supported by finite family", "sequences": len(verdicts),
                                  **worst.margins})
    first = next(v for v in verdicts if v.status is Status.INCONCLUSIVE)
    return MembershipVerdict(Status.INCONCLUSIVE, first.evidence, None, dict(first.margins))


def _family_members(sequences, pairs, horizon, tol, max_points) -> list:
    per_seq = [liminf_members(seq, pairs, horizon, tol, max_points) for seq in sequences]
    k = len(per_seq[0])
    out = []
    for j in range(k):
        verdicts = [vs[j] for vs in per_seq]
        out.append(FamilyVerdict(verdicts, _aggregate(verdicts)))
    return out


def _as_graph(pairs, dim) -> SampledGraph:
    if isinstance(pairs, SampledGraph):
        return pairs
    if isinstance(pairs, DualPair):
        pairs = [pairs]
    return SampledGraph.from_pairs(pairs, dim)


# ------------------------------------------------------------ public probes


def varsum_members(T1, T2, pairs, family: ProbeFamily | None = None, horizon=DEFAULT_HORIZON,
                   tol=DEFAULT_TOL, max_points=None) -> list:
    family = family or default_probe_family()
    seqs = [varsum_sequence(T1, T2, params) for params in family]
    return _family_members(seqs, _as_graph(pairs, T1.dim), horizon, tol, max_points)


def varsum_member(T1: OperatorSpec, T2: OperatorSpec, p: DualPair, family: ProbeFamily | None = None,
                  horizon: int = DEFAULT_HORIZON, tol: ToleranceConfig = DEFAULT_TOL,
                  max_points: int | None = None) -> FamilyVerdict:
    return varsum_members(T1, T2, [p], family, horizon, tol, max_points)[0]


def left_varsum_members(T1, T2, pairs, seqs=None, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL,
                        max_points=None) -> list:
    seqs = seqs or default_lambda_sequences()
    if not _has_exact_prox(T2):
        raise NotResolvable("the unregularized operand needs an exact prox")
    opseqs = [left_sum_sequence(T1, T2, params) for params in seqs]
    return _family_members(opseqs, _as_graph(pairs, T1.dim), horizon, tol, max_points)


def left_varsum_member(T1: OperatorSpec, T2: OperatorSpec, p: DualPair, seqs=None,
                       horizon: int = DEFAULT_HORIZON, tol: ToleranceConfig = DEFAULT_TOL,
                       max_points: int | None = None) -> FamilyVerdict:
    """Membership in the liminf of T1_(lam_n) + T2 over the given lam-sequences."""
    return left_varsum_members(T1, T2, [p], seqs, horizon, tol, max_points)[0]


def composition_eval(A, T: OperatorSpec, y, tol: ToleranceConfig = DEFAULT_TOL) -> ValueSet:
    """{A^T x* : x* in T(A y)}."""
    A = as_matrix(A)
    y = as_vector(y, A.shape[1])
    out = linear_image(A.T, op_eval(T, A @ y, tol))
    if isinstance(out, Unsupported):
        raise UnsupportedValue(out.reason)
    return out


def varcomp_members(T, A, pairs, seqs=None, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, max_points=None) -> list:
    seqs = seqs or default_lambda_sequences()
    A = as_matrix(A)
    opseqs = [composition_sequence(T, A, params) for params in seqs]
    return _family_members(opseqs, _as_graph(pairs, A.shape[1]), horizon, tol, max_points)


def varcomp_member(T: OperatorSpec, A, p: DualPair, seqs=None, horizon: int = DEFAULT_HORIZON,
                   tol: ToleranceConfig = DEFAULT_TOL, max_points: int | None = None) -> FamilyVerdict:
    """Membership in the liminf of A^T T_(lam_n) A over the given lam-sequences."""
    return varcomp_members(T, A, [p], seqs, horizon, tol, max_points)[0]


def lift_specs(T: OperatorSpec, A) -> tuple:
    """(T lifted to (y, x) -> {0} x T x, normal cone of the graph of A), both on R^(dY + dX)."""
    A = as_matrix(A)
    if A.shape[0] != T.dim:
        raise ValueError(f"A maps into R^{A.shape[0]} but T acts on R^{T.dim}")
    return ProductLift(T, A.shape[1]), GraphNormalCone(A)


def lifted_pair(A, p: DualPair) -> DualPair:
    """((y, A y), (y*, 0)) for p = (y, y*)."""
    A = as_matrix(A)
    return DualPair(np.concatenate([p.x, A @ p.x]), np.concatenate([p.xstar, np.zeros(A.shape[0])]))


@dataclass(frozen=True, eq=False)
class Crosscheck:
    route1: FamilyVerdict
    route2: FamilyVerdict
    agree: bool

    def to_dict(self) -> dict:
        return {"agree": self.agree, "route1": self.route1.to_dict(), "route2": self.route2.to_dict()}


def _crosscheck(r1: FamilyVerdict, r2: FamilyVerdict) -> Crosscheck:
    same = all(a.status is b.status for a, b in zip(r1.per_sequence, r2.per_sequence))
    return Crosscheck(r1, r2, same and r1.status is r2.status)


def composition_crosschecks(T, A, pairs, seqs=None, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL,
                            max_points=None) -> list:
    A = as_matrix(A)
    g = _as_graph(pairs, A.shape[1])
    Tt, NA = lift_specs(T, A)
    lifted = [lifted_pair(A, p) for p in g.pairs]
    r1 = varcomp_members(T, A, g, seqs, horizon, tol, max_points)
    r2 = left_varsum_members(Tt, NA, lifted, seqs, horizon, tol, max_points)
    return [_crosscheck(a, b) for a, b in zip(r1, r2)]


def composition_crosscheck(T: OperatorSpec, A, p: DualPair, seqs=None, horizon: int = DEFAULT_HORIZON,
                           tol: ToleranceConfig = DEFAULT_TOL, max_points: int | None = None) -> Crosscheck:
    """Variational composition at (y, y*) against the left variational sum of the lifts
    at ((y, A y), (y*, 0)); the two must agree sequence by sequence.
    """
    return composition_crosschecks(T, A, [p], seqs, horizon, tol, max_points)[0]
