import json

import numpy as np
import pytest

from finslerlab import cli
from finslerlab.report import ANCHORS, Record, Report, check, dumps, not_applicable, trace_csv
from finslerlab.suites import DEFAULT_TOLERANCES


def test_floats_round_trip_exactly():
    vals = [0.1, 1 / 3, 2.0 ** -1074, 1e308, -np.pi, 123456789.123456789]
    back = json.loads(dumps({"v": vals, "w": np.float64(0.7)}))
    assert back["v"] == vals and back["w"] == 0.7
    assert json.loads(dumps([float("nan")])) == ["nan"]


def test_records_and_anchors():
    assert set(DEFAULT_TOLERANCES) <= set(ANCHORS)
    assert check("x", "curvature.bridge", 1e-12, 1e-10).status == "pass"
    assert check("x", "curvature.bridge", float("nan"), 1e-10).status == "fail"
    assert not_applicable("x", "trace.linear_law", "why").detail["reason"] == "why"
    with pytest.raises(KeyError):
        Record("x", "no.such.anchor", "pass", 0.0, 1.0)
    with pytest.raises(ValueError):
        Record("x", "curvature.bridge", "maybe", 0.0, 1.0)
    rep = Report("verify", {})
    rep.add(check("x", "curvature.bridge", 1.0, 0.5))
    d = json.loads(rep.to_json())
    assert d["summary"] == {"pass": 0, "fail": 1, "not-applicable": 0} and rep.failed
    assert d["schema"] == "finslerlab/1" and len(d["conventions"]) == 16


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def test_tensors_exit_zero_and_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["tensors", "--catalog", "funk_ball", "--samples", "8", "--seed", "5"]
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    d = json.loads(a.read_text())
    assert d["command"] == "tensors" and d["summary"]["fail"] == 0
    assert len(d["data"]["samples"]) == 8


def test_classify_flags(capsys):
    code, out = run(["classify", "--catalog", "parallel_beta_product", "--samples", "10"], capsys)
    assert code == 0
    f = json.loads(out.out)["data"]["flags"]
    assert f["berwald"] and f["landsberg"] and not f["riemannian"] and not f["r_flat"]


def test_failing_check_exits_one(capsys):
    code, out = run(["tensors", "--catalog", "funk_ball", "--samples", "4",
                     "--tol-override", "fundamental.identities=0"], capsys)
    assert code == 1 and "FAIL fundamental.identities" in out.err


@pytest.mark.parametrize("argv", [
    ["tensors", "--catalog", "funk_ball", "--b", "0.3"],
    ["tensors", "--catalog", "funk_ball", "--tol-override", "nonsense=1"],
    ["tensors", "--catalog", "funk_ball", "--samples", "0"],
    ["geodesic", "--catalog", "funk_ball", "--t-span", "1,0"],
    ["geodesic", "--catalog", "funk_ball", "--x0", "0,0"],
])
def test_config_errors_exit_two(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_missing_chart_file_exits_two(tmp_path, capsys):
    assert run(["tensors", "--chart", str(tmp_path / "none.json")], capsys)[0] == 2


def test_invalid_chart_exits_three(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "bad", "dimension": 2, "a": ["1", "0", "0", "1"], "b": ["1.2", "0"],
                               "domain": {"type": "ball", "radius": 1.0}}))
    code, out = run(["tensors", "--chart", str(bad), "--samples", "5"], capsys)
    assert code == 3 and "offending sample" in out.err


def test_geodesic_trace_csv(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _ = run(["geodesic", "--catalog", "riemannian_sphere", "--samples", "5", "--t-span", "0,1",
                   "--out", str(out)], capsys)
    assert code == 0
    lines = (tmp_path / "g.trace.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,ydot1,ydot2,V1,V2,I,J,gVV,FV"
    assert len(lines) == 302
    d = json.loads(out.read_text())
    assert {r["name"] for r in d["records"]} >= {"geodesic.first_integral", "trace.linear_law"}
