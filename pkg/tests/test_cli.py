from __future__ import annotations

import csv
import io
import json
import math

import pytest

from ccslab.cli import main
from ccslab.scenario import load_scenario
from ccslab.suite import report_json, run_suite, to_json, worker_count

from conftest import ROOT, scenario_path

GOLDEN = ROOT / "tests" / "golden"


@pytest.mark.parametrize("name", ["t2_abelian_p1", "t3_constant_path"])
def test_reports_match_golden_bytes(name):
    text = report_json(run_suite(load_scenario(scenario_path(name))))
    assert text == (GOLDEN / f"{name}.json").read_text(encoding="utf-8")


def test_reports_do_not_depend_on_worker_count():
    scn = load_scenario(scenario_path("t3_constant_path"))
    assert report_json(run_suite(scn, 1)) == report_json(run_suite(scn, 4))


def test_worker_count_reads_the_environment(monkeypatch):
    monkeypatch.setenv("CCSLAB_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    with pytest.raises(ValueError):
        worker_count(0)


def test_json_encoding_of_special_values():
    text = to_json({"z": 1 + 2j, "x": 0.1, "n": math.nan, "i": -math.inf, "k": 3, "b": True})
    doc = json.loads(text)
    assert doc["z"] == {"re": 1.0, "im": 2.0}
    assert doc["x"] == 0.1 and doc["n"] == "nan" and doc["i"] == "-inf"
    assert doc["k"] == 3 and doc["b"] is True


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", str(scenario_path("t3_rank1_loop"))]) == 0
    assert "overall: PASS" in capsys.readouterr().out
    doc = json.loads(scenario_path("t3_rank1_loop").read_text())
    doc["checks"][0]["expected"] = [[0.25, 0.0]] * 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", str(bad)]) == 1
    assert "[FAIL] tertiary" in capsys.readouterr().out
    broken = tmp_path / "broken.json"
    broken.write_text("{\n  oops\n}")
    assert main(["verify", str(broken)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.json")]) == 2


def test_verify_writes_json_with_optional_timings(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", str(scenario_path("t1_abelian_p1")), "--json", str(out), "--timings"]) == 0
    doc = json.loads(out.read_text())
    assert "timings" in doc and doc["passed"] is True
    assert main(["verify", str(scenario_path("t1_abelian_p1")), "--json", str(out)]) == 0
    assert "timings" not in json.loads(out.read_text())


@pytest.mark.parametrize(
    "quantity, p, cycle",
    [("flatness", 2, None), ("chern", 1, "0,1"), ("eta", 2, "0,1,2"), ("transgression", 2, "0,1,2"),
     ("beta", 2, "0,1"), ("character", 2, "0,1,2"), ("tertiary", 2, "0,2")],
)
def test_compute_prints_one_quantity(quantity, p, cycle, capsys):
    args = ["compute", str(scenario_path("t3_tertiary_loop")), "--quantity", quantity, "--p", str(p)]
    if cycle:
        args += ["--cycle", cycle]
    assert main(args) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["quantity"] == quantity


def test_compute_tertiary_matches_the_scenario_constant(capsys):
    main(["compute", str(scenario_path("t3_tertiary_loop")), "--quantity", "tertiary", "--p", "2",
          "--cycle", "0,1"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["raw"]["re"] == pytest.approx(-0.7 * 1.3 / (4 * math.pi), abs=1e-12)


def test_report_csv_has_one_row_per_cycle(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["report", str(scenario_path("t3_tertiary_loop")), "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    tert = [r for r in rows if r["check"] == "tertiary"]
    assert len(tert) == 3 and all(r["passed"] == "true" for r in tert)


def test_converge_requires_three_levels(capsys):
    assert main(["converge", str(scenario_path("t3_tertiary_loop")), "--ladder", "4,8"]) == 2
    assert main(["converge", str(scenario_path("t3_tertiary_loop")), "--ladder", "4,6,8"]) == 0
    assert "ladder=[4, 6, 8]" in capsys.readouterr().out
