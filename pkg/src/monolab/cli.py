"""Command-line front end.

    monolab run SCENARIO.json [--out DIR] [--horizon N] [--eps-member X] [--timings]
    monolab examples [--filter NAME] [--list] [--eps-scale S]
    monolab export-field NAME PATH [--out DIR]
    monolab export-trace NAME PATH [--out DIR]

Exit codes: 0 success (whatever the verdicts), 1 failed golden example,
2 schema error, 3 numerical failure, 4 unknown export name.
"""
from __future__ import annotations

import argparse
import json
import math
import shutil
import sys
from pathlib import Path

import numpy as np

from .errors import DimensionError, NoConvergence, NotMonotoneError
from .scenario import ScenarioError, field_csv, file_stem, parse_scenario, run_scenario, trace_csv

EXIT_OK, EXIT_FAILED, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_UNKNOWN = 0, 1, 2, 3, 4
DEFAULT_OUT = "monolab_out"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_run(result, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for sub in ("traces", "fields"):
        if (out / sub).exists():
            shutil.rmtree(out / sub)
        (out / sub).mkdir()
    (out / "report.json").write_text(dumps(result.report))
    for name, (dim, trace) in result.traces.items():
        (out / "traces" / f"{file_stem(name)}.csv").write_text(trace_csv(dim, trace))
    for name, f in result.fields.items():
        (out / "fields" / f"{file_stem(name)}.csv").write_text(field_csv(f))


def _print_summary(report):
    for p in report["probes"]:
        statuses = p.get("statuses") or []
        extra = ", ".join(statuses) if statuses else ""
        if p["kind"] == "classify":
            c = p["classification"]
            extra = (f"monotone={c['is_monotone']} representable={c['is_representable']} "
                     f"maximal={c['is_maximal']}")
        elif p["kind"] == "certificate":
            extra = f"ok={p['certificate']['ok']}"
        elif p["kind"] == "mosco":
            extra = f"mosco_limit={p['mosco']['is_mosco_limit']}"
        print(f"{p['id']:<24} {p['kind']:<12} {extra}")


def cmd_run(args) -> int:
    try:
        doc = json.loads(Path(args.scenario).read_text())
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except json.JSONDecodeError as exc:
        print(f"error: scenario is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        sc = parse_scenario(doc, horizon=args.horizon, eps_member=args.eps_member)
        result = run_scenario(sc, timings=args.timings)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (DimensionError, NotMonotoneError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NoConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_run(result, Path(args.out))
    _print_summary(result.report)
    print(f"report written to {Path(args.out) / 'report.json'}")
    return EXIT_OK


def _export(kind: str):
    def run(args) -> int:
        src = Path(args.out) / kind / f"{file_stem(args.name)}.csv"
        if not src.is_file():
            available = sorted(p.stem.replace("__", ":") for p in (Path(args.out) / kind).glob("*.csv"))
            print(f"error: no {kind[:-1]} named {args.name!r} in {args.out}; "
                  f"available: {', '.join(available) or 'none'}", file=sys.stderr)
            return EXIT_UNKNOWN
        shutil.copyfile(src, args.path)
        return EXIT_OK
    return run


def cmd_examples(args) -> int:
    from .suite import EXAMPLES, run_suite

    if args.list:
        for ex in EXAMPLES:
            print(f"{ex.name:<28} {ex.summary}")
        return EXIT_OK
    try:
        outcome = run_suite(args.filter, eps_scale=args.eps_scale)
    except NoConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not outcome.results:
        print(f"error: no example matches {args.filter!r}", file=sys.stderr)
        return EXIT_UNKNOWN
    for r in outcome.results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<28} {r.seconds:7.2f}s")
        for check, ok, detail in r.checks:
            if not ok:
                print(f"      failed: {check}: {detail}")
    print(f"{outcome.passed} passed, {outcome.failed} failed")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "examples.json").write_text(dumps(outcome.to_dict()))
    return EXIT_OK if outcome.failed == 0 else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monolab", description="Monotone-operator laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", default=DEFAULT_OUT, help=f"output directory (default {DEFAULT_OUT})")
    p.add_argument("--horizon", type=int, default=None, help="override the scenario horizon")
    p.add_argument("--eps-member", type=float, default=None, help="override the membership tolerance")
    p.add_argument("--timings", action="store_true", help="record per-probe wall time in the report")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("examples", help="run the built-in golden examples")
    p.add_argument("--filter", default=None, help="substring of example names")
    p.add_argument("--list", action="store_true", help="list examples and exit")
    p.add_argument("--eps-scale", type=float, default=1.0, help="scale eps_member by this factor")
    p.add_argument("--out", default=None, help="also write examples.json here")
    p.set_defaults(func=cmd_examples)

    for kind in ("field", "trace"):
        p = sub.add_parser(f"export-{kind}", help=f"copy a {kind} CSV from the last run")
        p.add_argument("name", help="probe id (traces: ID:PAIR or ID:PAIR:SEQ; fields: ID:phi, ID:phi_star)")
        p.add_argument("path")
        p.add_argument("--out", default=DEFAULT_OUT, help="output directory of the run")
        p.set_defaults(func=_export(f"{kind}s"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "horizon", None) is not None and args.horizon < 1:
        print("schema error: --horizon must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
