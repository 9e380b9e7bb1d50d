import json

import pytest

from monolab import cli
from monolab.errors import NoConvergence
from monolab.scenario import ScenarioError, parse_scenario, run_scenario
from monolab.suite import EXAMPLES, run_suite

SINGLE = {
    "name": "single",
    "grid": {"x": [-10, 10], "xstar": [-10, 10], "step": 0.1},
    "probes": [{"id": "single", "kind": "classify", "graph": [[0, 0]]}],
}

MIXED = {
    "name": "mixed",
    "horizon": 500,
    "grid": {"x": [-1, 1], "xstar": [-1, 1], "step": 0.1},
    "operators": {
        "id": {"kind": "linear", "matrix": [[1]]},
        "abs": {"kind": "subdifferential", "function": {"kind": "abs_sum"}},
        "shifted": {"kind": "yosida", "inner": "abs", "lam": 0.5},
    },
    "probes": [
        {"id": "cls", "kind": "classify", "graph": [[0, 0], [0.5, 0.5]]},
        {"id": "inf", "kind": "liminf", "sequence": {"kind": "alternating"}, "pairs": [[0, 0], [1, 0]]},
        {"id": "sup", "kind": "limsup", "sequence": {"kind": "constant", "operator": "id"}, "pairs": [[1, 1]]},
        {"id": "sum", "kind": "varsum", "T1": "abs", "T2": "id", "pairs": [[0, 0.5]],
         "family": [{"lam": {"kind": "power", "p": 2}, "mu": {"kind": "power"}}]},
        {"id": "left", "kind": "left_varsum", "T1": "shifted", "T2": "id", "pairs": [[1, 1.5]],
         "lambdas": [{"kind": "geometric", "base": 2}]},
        {"id": "comp", "kind": "varcomp", "T": "id", "A": [[2]], "pairs": [[1, 4]]},
        {"id": "cross", "kind": "prop4", "T": "id", "A": [[0]], "pairs": [[1, 0]]},
        {"id": "cert", "kind": "lemma1", "sequence": {"kind": "alternating"}, "pair": [[1, 0]],
         "liminf_samples": [[0, 0]]},
        {"id": "mosco", "kind": "mosco", "sequence": {"kind": "constant", "operator": "id"},
         "candidate": [[t / 10, t / 10] for t in range(-10, 11)]},
    ],
}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, doc, *extra):
    out = tmp_path / "out"
    code = cli.main(["run", write(tmp_path, doc), "--out", str(out), *extra])
    return code, out


def test_classify_singleton_report(tmp_path):
    code, out = run(tmp_path, SINGLE)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    c = report["probes"][0]["classification"]
    assert c["is_representable"] is True and c["is_maximal"] is False
    assert report["format"] == "monolab-report" and report["version"] == 1
    assert report["probes"][0]["smallest_representable_extension"]["points"] == [[[0.0], [0.0]]]


def test_unknown_operator_names_the_probe(tmp_path, capsys):
    doc = {"probes": [{"id": "p7", "kind": "liminf", "sequence": {"kind": "constant", "operator": "nope"},
                       "pairs": [[0, 0]]}]}
    code, _ = run(tmp_path, doc)
    assert code == 2
    assert "p7" in capsys.readouterr().err


@pytest.mark.parametrize("doc,extra", [
    (dict(SINGLE, horizon=0), ()),
    (SINGLE, ("--horizon", "0")),
    ({"probes": []}, ()),
    ({"probes": [{"id": "a", "kind": "spin", "pairs": [[0, 0]]}]}, ()),
    ({"probes": [{"id": "a", "kind": "classify", "graph": [[0, 0]]}]}, ()),  # classify without grid
    ({"operators": {"bad": {"kind": "linear", "matrix": [[-1]]}},
      "probes": [{"id": "a", "kind": "liminf", "sequence": {"kind": "alternating"}, "pairs": [[0, 0]]}]}, ()),
    (dict(SINGLE, tolerances={"eps_nope": 1}), ()),
])
def test_schema_errors_exit_2(tmp_path, doc, extra):
    code, _ = run(tmp_path, doc, *extra)
    assert code == 2


def test_invalid_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NoConvergence("stuck", None)

    monkeypatch.setattr(cli, "run_scenario", boom)
    code, _ = run(tmp_path, SINGLE)
    assert code == 3


def test_exports(tmp_path):
    doc = dict(SINGLE, grid={"x": [-1, 1], "xstar": [-1, 1], "step": 0.1})
    doc["probes"] = doc["probes"] + [
        {"id": "inf", "kind": "liminf", "sequence": {"kind": "alternating"}, "pairs": [[0, 0]], "horizon": 50}]
    code, out = run(tmp_path, doc)
    assert code == 0
    field = tmp_path / "phi_star.csv"
    assert cli.main(["export-field", "single:phi_star", str(field), "--out", str(out)]) == 0
    lines = field.read_text().splitlines()
    assert lines[0] == "x_0,xstar_0,value"
    assert len(lines) == 1 + 441
    trace = tmp_path / "trace.csv"
    assert cli.main(["export-trace", "inf:0", str(trace), "--out", str(out)]) == 0
    rows = trace.read_text().splitlines()
    assert rows[0] == "n,x_0,residual,dist_to_x"
    assert len(rows) == 51
    assert cli.main(["export-trace", "nope:0", str(trace), "--out", str(out)]) == 4
    assert cli.main(["export-field", "nope", str(field), "--out", str(out)]) == 4


def test_all_probe_kinds_and_determinism(tmp_path):
    code, out = run(tmp_path, MIXED)
    assert code == 0
    first = (out / "report.json").read_bytes()
    traces = sorted(p.name for p in (out / "traces").iterdir())
    code, out2 = 0, tmp_path / "again"
    assert cli.main(["run", write(tmp_path, MIXED), "--out", str(out2)]) == 0
    assert (out2 / "report.json").read_bytes() == first
    for name in traces:
        assert (out / "traces" / name).read_bytes() == (out2 / "traces" / name).read_bytes()
    report = json.loads(first)
    ids = [p["id"] for p in report["probes"]]
    assert ids == [p["id"] for p in MIXED["probes"]]
    by_id = {p["id"]: p for p in report["probes"]}
    assert by_id["inf"]["statuses"] == ["member", "non_member"]
    assert by_id["sup"]["statuses"] == ["member"]
    assert by_id["sum"]["statuses"] == ["member"]
    assert by_id["cross"]["kind"] == "crosscheck" and by_id["cross"]["disagreements"] == 0
    assert by_id["cert"]["kind"] == "certificate" and by_id["cert"]["certificate"]["ok"]
    assert by_id["mosco"]["mosco"]["is_mosco_limit"]


def test_timings_only_on_request(tmp_path):
    code, out = run(tmp_path, SINGLE, "--timings")
    report = json.loads((out / "report.json").read_text())
    assert "seconds" in report["probes"][0]


def test_overrides(tmp_path):
    sc = parse_scenario(MIXED, horizon=123, eps_member=1e-3)
    assert sc.doc["horizon"] == 123 and sc.tolerances.eps_member == 1e-3


def test_schema_round_trip():
    sc = parse_scenario(MIXED)
    doc = sc.to_dict()
    again = parse_scenario(json.loads(json.dumps(doc))).to_dict()
    assert again == doc
    # references were expanded inline
    left = next(p for p in doc["probes"] if p["id"] == "left")
    assert left["T1"]["kind"] == "yosida" and left["T1"]["inner"]["kind"] == "subdifferential"


def test_schema_error_carries_field_path():
    with pytest.raises(ScenarioError) as info:
        parse_scenario({"probes": [{"id": "x", "kind": "liminf", "sequence": {"kind": "alternating"},
                                    "pairs": [[0, 0, 1]]}]})
    assert "pairs[0]" in info.value.field


def test_scenario_notes_reach_the_report():
    report = run_scenario(parse_scenario(dict(MIXED, horizon=50, notes=["truncated model"]))).report
    assert report["notes"][-1] == "truncated model"
    with pytest.raises(ScenarioError) as info:
        parse_scenario(dict(MIXED, notes="not a list"))
    assert info.value.field == "notes"


def test_report_lists_every_probe_once():
    report = run_scenario(parse_scenario(dict(MIXED, horizon=100))).report
    ids = [p["id"] for p in report["probes"]]
    assert len(ids) == len(set(ids)) == len(MIXED["probes"])


def test_examples_listing(capsys):
    assert cli.main(["examples", "--list"]) == 0
    assert len(EXAMPLES) >= 4
    assert len(capsys.readouterr().out.splitlines()) == len(EXAMPLES)


def test_examples_filter_unknown():
    assert cli.main(["examples", "--filter", "no-such-example"]) == 4


@pytest.mark.parametrize("scale", [1.0, 10.0])
def test_examples_suite_passes(scale):
    outcome = run_suite(eps_scale=scale)
    failed = [(r.name, [c for c in r.checks if not c[1]]) for r in outcome.results if not r.passed]
    assert not failed
    assert outcome.passed == len(EXAMPLES)
