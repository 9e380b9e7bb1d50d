"""Scenario documents: JSON schema, canonical form and execution.

A scenario names operators, optionally a grid, tolerances and a horizon,
and lists probes.  Operators and sets use a tagged-variant convention,
``{"kind": ..., ...}``; wherever an operator is expected a string refers to
an entry of the ``operators`` table.  Parsing produces a canonical document
(references expanded, defaults filled in), so parse -> serialize -> parse is
a fixed point.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DimensionError, NotMonotoneError
from .fitzpatrick import GridSpec, ScalarField, classify, conjugate_field, fitzpatrick_field, in_F_class, L_set
from .limits import (DEFAULT_HORIZON, OperatorSequence, Status, alternating_sequence, box_normal_sequence,
                     cluster_certificate, constant_sequence, liminf_members, limsup_members,
                     mosco_maximality_probe, shifted_quadratic_sequence)
from .operators import (AbsValueSum, AdjointComposition, AffineGraph, BoxSet, DualPair, FiniteGraph,
                        GraphNormalCone, Halfspace, IndicatorOf, Linear, NormalCone, ProductLift,
                        Quadratic, SampledGraph, ShiftedPower, SingletonSet, Subdifferential, SumOf,
                        ToleranceConfig, Yosida, Zero, graph_monotone_check)
from .varcalc import (ParamSequence, ParamSequencePair, ProbeFamily, composition_crosschecks,
                      left_sum_sequence, left_varsum_members, varcomp_members, varsum_members,
                      varsum_sequence, composition_sequence)

REPORT_FORMAT = "monolab-report"
REPORT_VERSION = 1
PROBE_KINDS = ("classify", "liminf", "limsup", "varsum", "left_varsum", "varcomp", "crosscheck",
               "certificate", "mosco")
KIND_ALIASES = {"prop4": "crosscheck", "lemma1": "certificate"}


class ScenarioError(ValueError):
    """Schema violation; ``field`` is a dotted path to the offending entry."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


def _req(d, key, path):
    if not isinstance(d, dict):
        raise ScenarioError(path, "expected an object")
    if key not in d:
        raise ScenarioError(f"{path}.{key}", "missing")
    return d[key]


def _num(v, path, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(path, f"expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ScenarioError(path, f"expected an integer, got {v!r}")
    if positive and v <= 0:
        raise ScenarioError(path, f"must be > 0, got {v!r}")
    return int(v) if integer else float(v)


def _vec(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a number or a nonempty list of numbers")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _bound(v, path):
    if v in ("inf", "-inf"):
        return float(v)
    return _num(v, path)


def _mat(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [[v]]
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ScenarioError(path, "expected a matrix as a list of rows")
    rows = [[_num(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1 or not rows[0]:
        raise ScenarioError(path, "matrix rows must be nonempty and of equal length")
    return rows


def _fmt_bound(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


# ------------------------------------------------------------ canonical forms


def canon_set(d, path):
    kind = _req(d, "kind", path)
    if kind == "singleton":
        return {"kind": kind, "point": _vec(_req(d, "point", path), f"{path}.point")}
    if kind == "box":
        lo = [_bound(x, f"{path}.lo") for x in np.atleast_1d(_req(d, "lo", path)).tolist()]
        hi = [_bound(x, f"{path}.hi") for x in np.atleast_1d(_req(d, "hi", path)).tolist()]
        return {"kind": kind, "lo": [_fmt_bound(x) for x in lo], "hi": [_fmt_bound(x) for x in hi]}
    if kind == "halfspace":
        return {"kind": kind, "normal": _vec(_req(d, "normal", path), f"{path}.normal"),
                "offset": _num(_req(d, "offset", path), f"{path}.offset")}
    if kind == "affine_graph":
        return {"kind": kind, "A": _mat(_req(d, "A", path), f"{path}.A")}
    raise ScenarioError(f"{path}.kind", f"unknown set kind {kind!r}")


def build_set(d):
    k = d["kind"]
    if k == "singleton":
        return SingletonSet(d["point"])
    if k == "box":
        return BoxSet([float(x) for x in d["lo"]], [float(x) for x in d["hi"]])
    if k == "halfspace":
        return Halfspace(d["normal"], d["offset"])
    return AffineGraph(d["A"])


def canon_function(d, path):
    kind = _req(d, "kind", path)
    if kind == "abs_sum":
        return {"kind": kind, "dim": _num(d.get("dim", 1), f"{path}.dim", positive=True, integer=True)}
    if kind == "quadratic":
        Q = _mat(_req(d, "Q", path), f"{path}.Q")
        b = _vec(d["b"], f"{path}.b") if "b" in d else [0.0] * len(Q)
        return {"kind": kind, "Q": Q, "b": b}
    if kind == "indicator":
        return {"kind": kind, "set": canon_set(_req(d, "set", path), f"{path}.set")}
    if kind == "power":
        p = _num(d.get("p", 2), f"{path}.p", integer=True)
        if p not in (1, 2):
            raise ScenarioError(f"{path}.p", "power must be 1 or 2")
        return {"kind": kind, "center": _vec(_req(d, "center", path), f"{path}.center"), "p": p,
                "scale": _num(d.get("scale", 1.0), f"{path}.scale", positive=True)}
    raise ScenarioError(f"{path}.kind", f"unknown function kind {kind!r}")


def build_function(d):
    k = d["kind"]
    if k == "abs_sum":
        return AbsValueSum(d["dim"])
    if k == "quadratic":
        return Quadratic(d["Q"], d["b"])
    if k == "indicator":
        return IndicatorOf(build_set(d["set"]))
    return ShiftedPower(d["center"], d["p"], d["scale"])


def _pairs(v, path):
    if not isinstance(v, list):
        raise ScenarioError(path, "expected a list of [x, x*] pairs")
    out = []
    for i, p in enumerate(v):
        if not isinstance(p, list) or len(p) != 2:
            raise ScenarioError(f"{path}[{i}]", "expected [x, x*]")
        x, xs = _vec(p[0], f"{path}[{i}][0]"), _vec(p[1], f"{path}[{i}][1]")
        if len(x) != len(xs):
            raise ScenarioError(f"{path}[{i}]", "x and x* differ in dimension")
        out.append([x, xs])
    if len({len(p[0]) for p in out}) > 1:
        raise ScenarioError(path, "pairs differ in dimension")
    return out


def canon_operator(d, path, table):
    if isinstance(d, str):
        if d not in table:
            raise ScenarioError(path, f"unknown operator name {d!r}")
        return table[d]
    kind = _req(d, "kind", path)
    if kind == "zero":
        return {"kind": kind, "dim": _num(d.get("dim", 1), f"{path}.dim", positive=True, integer=True)}
    if kind == "linear":
        return {"kind": kind, "matrix": _mat(_req(d, "matrix", path), f"{path}.matrix")}
    if kind == "subdifferential":
        return {"kind": kind, "function": canon_function(_req(d, "function", path), f"{path}.function")}
    if kind == "normal_cone":
        return {"kind": kind, "set": canon_set(_req(d, "set", path), f"{path}.set")}
    if kind == "finite_graph":
        pairs = _pairs(_req(d, "pairs", path), f"{path}.pairs")
        dim = len(pairs[0][0]) if pairs else _num(_req(d, "dim", path), f"{path}.dim", True, True)
        return {"kind": kind, "dim": dim, "pairs": pairs}
    if kind == "yosida":
        return {"kind": kind, "inner": canon_operator(_req(d, "inner", path), f"{path}.inner", table),
                "lam": _num(_req(d, "lam", path), f"{path}.lam", positive=True)}
    if kind == "sum":
        parts = _req(d, "parts", path)
        if not isinstance(parts, list) or not parts:
            raise ScenarioError(f"{path}.parts", "expected a nonempty list")
        return {"kind": kind, "parts": [canon_operator(p, f"{path}.parts[{i}]", table) for i, p in enumerate(parts)]}
    if kind == "adjoint_composition":
        return {"kind": kind, "A": _mat(_req(d, "A", path), f"{path}.A"),
                "inner": canon_operator(_req(d, "inner", path), f"{path}.inner", table)}
    if kind == "product_lift":
        return {"kind": kind, "inner": canon_operator(_req(d, "inner", path), f"{path}.inner", table),
                "dim_y": _num(_req(d, "dim_y", path), f"{path}.dim_y", positive=True, integer=True)}
    if kind == "graph_normal_cone":
        return {"kind": kind, "A": _mat(_req(d, "A", path), f"{path}.A")}
    raise ScenarioError(f"{path}.kind", f"unknown operator kind {kind!r}")


def build_operator(d):
    k = d["kind"]
    if k == "zero":
        return Zero(d["dim"])
    if k == "linear":
        return Linear(d["matrix"])
    if k == "subdifferential":
        return Subdifferential(build_function(d["function"]))
    if k == "normal_cone":
        return NormalCone(build_set(d["set"]))
    if k == "finite_graph":
        return FiniteGraph(SampledGraph.from_pairs(d["pairs"], d["dim"]))
    if k == "yosida":
        return Yosida(build_operator(d["inner"]), d["lam"])
    if k == "sum":
        return SumOf(tuple(build_operator(p) for p in d["parts"]))
    if k == "adjoint_composition":
        return AdjointComposition(d["A"], build_operator(d["inner"]))
    if k == "product_lift":
        return ProductLift(build_operator(d["inner"]), d["dim_y"])
    return GraphNormalCone(d["A"])


def canon_param(d, path, allow_zero=False):
    kind = _req(d, "kind", path)
    if kind == "power":
        return {"kind": kind, "p": _num(d.get("p", 1), f"{path}.p", positive=True),
                "scale": _num(d.get("scale", 1.0), f"{path}.scale", positive=True)}
    if kind == "geometric":
        base = _num(d.get("base", 2.0), f"{path}.base")
        if base <= 1:
            raise ScenarioError(f"{path}.base", "base must exceed 1")
        return {"kind": kind, "base": base}
    if kind == "zero" and allow_zero:
        return {"kind": kind}
    raise ScenarioError(f"{path}.kind", f"unknown parameter sequence kind {kind!r}")


def _param_fn(d):
    k = d["kind"]
    if k == "power":
        p, s = d["p"], d["scale"]
        desc = ("1" if s == 1 else f"{s:g}") + "/n" + ("" if p == 1 else f"^{p:g}")
        return (lambda n: s / n**p), desc, None
    if k == "geometric":
        b = d["base"]
        # keep b^-n well inside the normal double range
        return (lambda n: b**-n), f"{b:g}^-n", int(60 * math.log(2) / math.log(b))
    return (lambda n: 0.0), "0", None


def build_param(d) -> ParamSequence:
    f, desc, top = _param_fn(d)
    return ParamSequence(f, f"lam={desc}", top)


def build_param_pair(d) -> ParamSequencePair:
    f1, d1, t1 = _param_fn(d["lam"])
    f2, d2, t2 = _param_fn(d["mu"])
    tops = [t for t in (t1, t2) if t is not None]
    kind = "symmetric" if d["lam"] == d["mu"] else ("left" if d["mu"]["kind"] == "zero" else "custom")
    return ParamSequencePair(lambda n: (f1(n), f2(n)), f"lam={d1}, mu={d2}", kind, min(tops) if tops else None)


DEFAULT_FAMILY = [
    {"lam": {"kind": "power", "p": 1.0, "scale": 1.0}, "mu": {"kind": "power", "p": 1.0, "scale": 1.0}},
    {"lam": {"kind": "power", "p": 2.0, "scale": 1.0}, "mu": {"kind": "power", "p": 1.0, "scale": 1.0}},
    {"lam": {"kind": "power", "p": 1.0, "scale": 1.0}, "mu": {"kind": "power", "p": 2.0, "scale": 1.0}},
    {"lam": {"kind": "geometric", "base": 2.0}, "mu": {"kind": "geometric", "base": 2.0}},
]
DEFAULT_LAMBDAS = [
    {"kind": "power", "p": 1.0, "scale": 1.0},
    {"kind": "power", "p": 2.0, "scale": 1.0},
    {"kind": "geometric", "base": 2.0},
]


def canon_family(v, path):
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a nonempty list of {lam, mu} sequences")
    out = []
    for i, m in enumerate(v):
        p = f"{path}[{i}]"
        lam = canon_param(_req(m, "lam", p), f"{p}.lam", True)
        mu = canon_param(_req(m, "mu", p), f"{p}.mu", True)
        if lam["kind"] == "zero" and mu["kind"] == "zero":
            raise ScenarioError(p, "lam and mu cannot both vanish")
        out.append({"lam": lam, "mu": mu})
    return out


def canon_lambdas(v, path):
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a nonempty list of parameter sequences")
    return [canon_param(m, f"{path}[{i}]") for i, m in enumerate(v)]


def canon_sequence(d, path, table):
    kind = _req(d, "kind", path)
    if kind in ("alternating", "shifted_quadratic", "box_normal"):
        return {"kind": kind}
    if kind == "constant":
        return {"kind": kind, "operator": canon_operator(_req(d, "operator", path), f"{path}.operator", table)}
    if kind == "varsum":
        return {"kind": kind, "T1": canon_operator(_req(d, "T1", path), f"{path}.T1", table),
                "T2": canon_operator(_req(d, "T2", path), f"{path}.T2", table),
                "params": canon_family([_req(d, "params", path)], f"{path}.params")[0]}
    if kind == "left_sum":
        return {"kind": kind, "T1": canon_operator(_req(d, "T1", path), f"{path}.T1", table),
                "T2": canon_operator(_req(d, "T2", path), f"{path}.T2", table),
                "params": canon_param(_req(d, "params", path), f"{path}.params")}
    if kind == "composition":
        return {"kind": kind, "T": canon_operator(_req(d, "T", path), f"{path}.T", table),
                "A": _mat(_req(d, "A", path), f"{path}.A"),
                "params": canon_param(_req(d, "params", path), f"{path}.params")}
    raise ScenarioError(f"{path}.kind", f"unknown sequence kind {kind!r}")


def build_sequence(d) -> OperatorSequence:
    k = d["kind"]
    if k == "alternating":
        return alternating_sequence()
    if k == "shifted_quadratic":
        return shifted_quadratic_sequence()
    if k == "box_normal":
        return box_normal_sequence()
    if k == "constant":
        return constant_sequence(build_operator(d["operator"]))
    if k == "varsum":
        return varsum_sequence(build_operator(d["T1"]), build_operator(d["T2"]), build_param_pair(d["params"]))
    if k == "left_sum":
        return left_sum_sequence(build_operator(d["T1"]), build_operator(d["T2"]), build_param(d["params"]))
    return composition_sequence(build_operator(d["T"]), d["A"], build_param(d["params"]))


def canon_grid(d, path):
    if not isinstance(d, dict):
        raise ScenarioError(path, "expected an object")
    if "step" in d:
        dim = _num(d.get("dim", 1), f"{path}.dim", positive=True, integer=True)
        x = _vec(_req(d, "x", path), f"{path}.x")
        xs = _vec(_req(d, "xstar", path), f"{path}.xstar")
        if len(x) != 2 or len(xs) != 2:
            raise ScenarioError(path, "x and xstar bounds must be [lo, hi]")
        step = _num(d["step"], f"{path}.step", positive=True)
        try:
            g = GridSpec.from_step(x, xs, step, dim)
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from None
    else:
        try:
            g = GridSpec(_vec(_req(d, "lo", path), f"{path}.lo"), _vec(_req(d, "hi", path), f"{path}.hi"),
                         [_num(c, f"{path}.counts", integer=True) for c in _req(d, "counts", path)])
        except (ValueError, DimensionError) as exc:
            raise ScenarioError(path, str(exc)) from None
    return g.to_dict()


# ------------------------------------------------------------------ probes

_PROBE_ARGS = {
    "classify": {"graph": "pairs"},
    "liminf": {"sequence": "sequence", "pairs": "pairs"},
    "limsup": {"sequence": "sequence", "pairs": "pairs"},
    "varsum": {"T1": "operator", "T2": "operator", "pairs": "pairs", "family?": "family"},
    "left_varsum": {"T1": "operator", "T2": "operator", "pairs": "pairs", "lambdas?": "lambdas"},
    "varcomp": {"T": "operator", "A": "matrix", "pairs": "pairs", "lambdas?": "lambdas"},
    "crosscheck": {"T": "operator", "A": "matrix", "pairs": "pairs", "lambdas?": "lambdas"},
    "certificate": {"sequence": "sequence", "pair": "pairs", "liminf_samples": "pairs"},
    "mosco": {"sequence": "sequence", "candidate": "pairs"},
}


def canon_probe(d, path, table, ids):
    pid = _req(d, "id", path)
    if not isinstance(pid, str) or not pid or any(c in pid for c in "/\\:"):
        raise ScenarioError(f"{path}.id", "probe ids are nonempty strings without '/', '\\' or ':'")
    if pid in ids:
        raise ScenarioError(f"{path}.id", f"duplicate probe id {pid!r}")
    kind = _req(d, "kind", path)
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in PROBE_KINDS:
        raise ScenarioError(f"{path}.kind", f"unknown probe kind {kind!r}")
    where = f"probe {pid!r}"
    out = {"id": pid, "kind": kind}
    spec = _PROBE_ARGS[kind]
    known = {k.rstrip("?") for k in spec} | {"id", "kind", "horizon", "max_points"}
    extra = set(d) - known
    if extra:
        raise ScenarioError(f"{where}.{sorted(extra)[0]}", "unexpected argument")
    for key, typ in spec.items():
        optional = key.endswith("?")
        key = key.rstrip("?")
        if key not in d:
            if optional:
                out[key] = DEFAULT_FAMILY if typ == "family" else DEFAULT_LAMBDAS
                continue
            raise ScenarioError(f"{where}.{key}", "missing")
        v, p = d[key], f"{where}.{key}"
        if typ == "pairs":
            v = _pairs(v, p)
            if not v:
                raise ScenarioError(p, "needs at least one pair")
            if key == "pair" and len(v) != 1:
                raise ScenarioError(p, "expects exactly one pair")
        elif typ == "sequence":
            v = canon_sequence(v, p, table)
        elif typ == "operator":
            v = canon_operator(v, p, table)
        elif typ == "matrix":
            v = _mat(v, p)
        elif typ == "family":
            v = canon_family(v, p)
        elif typ == "lambdas":
            v = canon_lambdas(v, p)
        out[key] = v
    for key in ("horizon", "max_points"):
        if key in d and d[key] is not None:
            out[key] = _num(d[key], f"{where}.{key}", positive=True, integer=True)
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    doc: dict  # canonical document

    @property
    def name(self) -> str:
        return self.doc["name"]

    @property
    def probes(self) -> list:
        return self.doc["probes"]

    @property
    def tolerances(self) -> ToleranceConfig:
        return ToleranceConfig(**self.doc["tolerances"])

    @property
    def grid(self) -> GridSpec | None:
        g = self.doc.get("grid")
        return None if g is None else GridSpec(g["lo"], g["hi"], g["counts"])

    def to_dict(self) -> dict:
        return self.doc


def parse_scenario(doc, horizon: int | None = None, eps_member: float | None = None) -> Scenario:
    """Validate and canonicalize a scenario document; overrides replace document values."""
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    out = {"name": str(doc.get("name", "scenario")), "version": REPORT_VERSION}
    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise ScenarioError("tolerances", "expected an object")
    tol_fields = ToleranceConfig().__dict__
    for k in tol_doc:
        if k not in tol_fields:
            raise ScenarioError(f"tolerances.{k}", "unknown tolerance")
    tol = {k: _num(tol_doc.get(k, v), f"tolerances.{k}", positive=True) for k, v in tol_fields.items()}
    if eps_member is not None:
        tol["eps_member"] = _num(eps_member, "--eps-member", positive=True)
    out["tolerances"] = tol
    h = doc.get("horizon", DEFAULT_HORIZON) if horizon is None else horizon
    out["horizon"] = _num(h, "horizon", positive=True, integer=True)
    mp = doc.get("max_points")
    out["max_points"] = None if mp is None else _num(mp, "max_points", positive=True, integer=True)
    if "grid" in doc:
        out["grid"] = canon_grid(doc["grid"], "grid")
    notes = doc.get("notes", [])
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        raise ScenarioError("notes", "expected a list of strings")
    out["notes"] = list(notes)
    ops = doc.get("operators", {})
    if not isinstance(ops, dict):
        raise ScenarioError("operators", "expected an object mapping names to operators")
    table = {}
    for name, od in ops.items():
        table[name] = canon_operator(od, f"operators.{name}", table)
    out["operators"] = table
    probes = doc.get("probes")
    if not isinstance(probes, list) or not probes:
        raise ScenarioError("probes", "expected a nonempty list")
    ids = set()
    canon = []
    for i, pd in enumerate(probes):
        p = canon_probe(pd, f"probes[{i}]", table, ids)
        ids.add(p["id"])
        if p["kind"] in ("classify", "mosco") and "grid" not in out:
            raise ScenarioError(f"probe {p['id']!r}.grid", "this probe kind needs a scenario grid")
        canon.append(p)
    out["probes"] = canon
    sc = Scenario(out)
    _check_buildable(sc)
    return sc


def _check_buildable(sc: Scenario):
    """Instantiate every operator and sequence once so type errors surface as schema errors."""
    for name, od in sc.doc["operators"].items():
        _build_or_fail(build_operator, od, f"operators.{name}")
    for p in sc.probes:
        where = f"probe {p['id']!r}"
        for key in ("T1", "T2", "T"):
            if key in p:
                _build_or_fail(build_operator, p[key], f"{where}.{key}")
        if "sequence" in p:
            seq = _build_or_fail(build_sequence, p["sequence"], f"{where}.sequence")
            _build_or_fail(seq, 1, f"{where}.sequence")
        if "family" in p:
            for i, m in enumerate(p["family"]):
                _build_or_fail(build_param_pair, m, f"{where}.family[{i}]")
        if "lambdas" in p:
            for i, m in enumerate(p["lambdas"]):
                _build_or_fail(build_param, m, f"{where}.lambdas[{i}]")


def _build_or_fail(fn, arg, path):
    try:
        return fn(arg)
    except (ValueError, DimensionError, NotMonotoneError) as exc:
        raise ScenarioError(path, str(exc)) from None


# --------------------------------------------------------------- execution


@dataclass(eq=False)
class RunResult:
    report: dict
    traces: dict = field(default_factory=dict)  # name -> (d, ConvergenceTrace)
    fields: dict = field(default_factory=dict)  # name -> ScalarField


def _graph(pairs) -> SampledGraph:
    return SampledGraph.from_pairs([(p[0], p[1]) for p in pairs])


def _summary(status) -> str:
    return status.value if isinstance(status, Status) else str(status)


def run_scenario(sc: Scenario, timings: bool = False) -> RunResult:
    tol = sc.tolerances
    result = RunResult({})
    entries = []
    for p in sc.probes:
        t0 = time.perf_counter()
        entry = {"id": p["id"], "kind": p["kind"]}
        entry.update(_RUNNERS[p["kind"]](sc, p, tol, result))
        if timings:
            entry["seconds"] = round(time.perf_counter() - t0, 6)
        entries.append(entry)
    counts = {}
    for e in entries:
        for s in e.get("statuses", []):
            counts[s] = counts.get(s, 0) + 1
    result.report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "package_version": __version__,
        "scenario": sc.name,
        "horizon": sc.doc["horizon"],
        "tolerances": sc.doc["tolerances"],
        "probes": entries,
        "summary": {"probes": len(entries), "verdicts": dict(sorted(counts.items()))},
        "traces": sorted(result.traces),
        "fields": sorted(result.fields),
        "notes": [
            "Membership verdicts are finite-horizon numerical evidence, never proofs.",
            "Finite dimension: weak and strong limits coincide, so one probe covers both.",
            "Variational member verdicts are supported by the finite probe family only; "
            "non-member verdicts from any single sequence are sound.",
        ] + list(sc.doc.get("notes", [])),
    }
    return result


def _horizon(sc, p):
    return p.get("horizon", sc.doc["horizon"]), p.get("max_points", sc.doc["max_points"])


def _store(result, name, verdict, dim):
    result.traces[name] = (dim, verdict.evidence)


def _run_classify(sc, p, tol, result):
    g = _graph(p["graph"])
    grid = sc.grid
    if g.dim != grid.dim:
        raise ScenarioError(f"probe {p['id']!r}.graph", "graph and grid dimensions differ")
    if not grid.contains(g.points):
        raise ScenarioError(f"probe {p['id']!r}.graph", "graph lies outside the grid")
    cls = classify(g, grid, tol)
    out = {"classification": cls.to_dict()}
    if cls.is_monotone:
        phi = fitzpatrick_field(g, grid)
        phi_star = conjugate_field(phi)
        result.fields[f"{p['id']}:phi"] = phi
        result.fields[f"{p['id']}:phi_star"] = phi_star
        out["fitzpatrick_in_F"] = in_F_class(phi, tol).ok
        L = L_set(phi_star, tol)
        # in finite dimension this is the intersection of all maximal monotone extensions
        out["smallest_representable_extension"] = {
            "label": "T00", "size": len(L),
            "points": [[a.tolist(), b.tolist()] for a, b in zip(L.x, L.xstar)] if len(L) <= 200 else None,
        }
    else:
        out["monotone_check"] = {"worst_gap": graph_monotone_check(g, tol).worst_gap}
    out["statuses"] = []
    return out


def _pair_list(pairs):
    return SampledGraph.from_pairs([(q[0], q[1]) for q in pairs])


def _run_seq_probe(rule):
    def run(sc, p, tol, result):
        seq = build_sequence(p["sequence"])
        N, mp = _horizon(sc, p)
        verdicts = rule(seq, _pair_list(p["pairs"]), N, tol, mp)
        for j, v in enumerate(verdicts):
            _store(result, f"{p['id']}:{j}", v, seq.dim)
        return {"sequence": seq.description,
                "verdicts": [{"pair": q, **v.to_dict()} for q, v in zip(p["pairs"], verdicts)],
                "statuses": [v.status.value for v in verdicts]}
    return run


def _family_entry(p, pairs, results, result, prefix, dim):
    out = []
    for j, (q, fv) in enumerate(zip(pairs, results)):
        for s, v in enumerate(fv.per_sequence):
            _store(result, f"{prefix}:{j}:{s}", v, dim)
        out.append({"pair": q, **fv.to_dict()})
    return out


def _run_varsum(sc, p, tol, result):
    T1, T2 = build_operator(p["T1"]), build_operator(p["T2"])
    fam = ProbeFamily(tuple(build_param_pair(m) for m in p["family"]))
    N, mp = _horizon(sc, p)
    res = varsum_members(T1, T2, _pair_list(p["pairs"]), fam, N, tol, mp)
    return {"results": _family_entry(p, p["pairs"], res, result, p["id"], T1.dim),
            "statuses": [r.status.value for r in res]}


def _run_left(sc, p, tol, result):
    T1, T2 = build_operator(p["T1"]), build_operator(p["T2"])
    seqs = tuple(build_param(m) for m in p["lambdas"])
    N, mp = _horizon(sc, p)
    res = left_varsum_members(T1, T2, _pair_list(p["pairs"]), seqs, N, tol, mp)
    return {"results": _family_entry(p, p["pairs"], res, result, p["id"], T1.dim),
            "statuses": [r.status.value for r in res]}


def _run_varcomp(sc, p, tol, result):
    T = build_operator(p["T"])
    seqs = tuple(build_param(m) for m in p["lambdas"])
    N, mp = _horizon(sc, p)
    A = np.array(p["A"], dtype=float)
    res = varcomp_members(T, A, _pair_list(p["pairs"]), seqs, N, tol, mp)
    return {"results": _family_entry(p, p["pairs"], res, result, p["id"], A.shape[1]),
            "statuses": [r.status.value for r in res]}


def _run_crosscheck(sc, p, tol, result):
    T = build_operator(p["T"])
    seqs = tuple(build_param(m) for m in p["lambdas"])
    N, mp = _horizon(sc, p)
    A = np.array(p["A"], dtype=float)
    res = composition_crosschecks(T, A, _pair_list(p["pairs"]), seqs, N, tol, mp)
    r1 = _family_entry(p, p["pairs"], [c.route1 for c in res], result, f"{p['id']}:route1", A.shape[1])
    r2 = _family_entry(p, p["pairs"], [c.route2 for c in res], result, f"{p['id']}:route2", A.shape[0] + A.shape[1])
    return {"results": [{"pair": q, "agree": c.agree, "route1": a, "route2": b}
                        for q, c, a, b in zip(p["pairs"], res, r1, r2)],
            "disagreements": sum(not c.agree for c in res),
            "statuses": [c.route1.status.value for c in res]}


def _run_certificate(sc, p, tol, result):
    seq = build_sequence(p["sequence"])
    N, mp = _horizon(sc, p)
    q = p["pair"][0]
    cert = cluster_certificate(seq, DualPair(q[0], q[1]), _pair_list(p["liminf_samples"]), N, tol, mp)
    result.traces[f"{p['id']}:0"] = (seq.dim, cert.trace)
    return {"sequence": seq.description, "certificate": cert.to_dict(), "statuses": []}


def _run_mosco(sc, p, tol, result):
    seq = build_sequence(p["sequence"])
    N, mp = _horizon(sc, p)
    cand = _pair_list(p["candidate"])
    if not sc.grid.contains(cand.points):
        raise ScenarioError(f"probe {p['id']!r}.candidate", "candidate lies outside the grid")
    rep = mosco_maximality_probe(seq, cand, sc.grid, N, tol, mp)
    return {"sequence": seq.description, "mosco": rep.to_dict(), "statuses": []}


_RUNNERS = {
    "classify": _run_classify,
    "liminf": _run_seq_probe(liminf_members),
    "limsup": _run_seq_probe(limsup_members),
    "varsum": _run_varsum,
    "left_varsum": _run_left,
    "varcomp": _run_varcomp,
    "crosscheck": _run_crosscheck,
    "certificate": _run_certificate,
    "mosco": _run_mosco,
}


# ------------------------------------------------------------------ exports


def _f(x: float) -> str:
    return repr(float(x))


def trace_csv(dim: int, trace) -> str:
    header = ["n"] + [f"x_{i}" for i in range(dim)] + ["residual", "dist_to_x"]
    lines = [",".join(header)]
    for n, x, res, dist in trace.rows():
        lines.append(",".join([str(n)] + [_f(v) for v in x] + [_f(res), _f(dist)]))
    return "\n".join(lines) + "\n"


def field_csv(f: ScalarField) -> str:
    d = f.grid.dim
    header = [f"x_{i}" for i in range(d)] + [f"xstar_{i}" for i in range(d)] + ["value"]
    lines = [",".join(header)]
    for node, v in f.rows():
        lines.append(",".join([_f(c) for c in node] + [_f(v) if math.isfinite(v) else "inf"]))
    return "\n".join(lines) + "\n"


def file_stem(name: str) -> str:
    return name.replace(":", "__")
