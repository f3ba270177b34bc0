import json

import pytest

from roipace.cli import main

BAD = """{
  "buyers": [
    {"values": ["1", "1"], "cost_curve": {"segments": [["0", "1"]]}},
    {"values": ["1", "-2"], "cost_curve": {"segments": [["0", "1"]]}}
  ]
}
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_bundled(capsys):
    code, out, _ = run(capsys, "validate", "example1")
    data = json.loads(out)
    assert code == 0 and data["valid"] and data["config"]["name"] == "example1"


def test_validate_reports_line_numbers(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(BAD)
    code, _, err = run(capsys, "validate", str(path))
    assert code == 1
    assert f"{path}:4:" in err


def test_malformed_json_reports_line(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "buyers": [\n    {"values": [1,}\n  ]\n}\n')
    code, _, err = run(capsys, "validate", str(path))
    assert code == 1 and f"{path}:3" in err


def test_usage_errors_exit_one(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "run", "example1", "--alphas", "1")[0] == 1
    assert run(capsys, "run", "example1", "--alphas", "x,y")[0] == 1
    assert run(capsys, "validate", "/nonexistent/file.json")[0] == 1
    assert run(capsys, "reproduce", "zz")[0] == 1


def test_run_and_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "run", "example1", "--csv", str(tmp_path))
    assert code == 0
    assert json.loads(out)["outcome"]["payments"] == ["1/2", "1/2"]
    assert (tmp_path / "prices.csv").read_text().startswith("good,")


def test_verify_exit_codes(capsys):
    assert run(capsys, "verify", "example1")[0] == 0
    code, out, _ = run(capsys, "verify", "example1", "--alphas", "1,1")
    assert code == 2 and json.loads(out)["status"] == "not_ne"
    assert run(capsys, "verify", "example3")[0] == 0


def test_solve_and_trace_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "example1", "--csv", str(tmp_path))
    data = json.loads(out)
    assert code == 0 and data["certificate"]["alphas"] == ["1/2", "1/2"]
    assert (tmp_path / "delta_trace.csv").exists()


def test_frontier(capsys):
    code, out, _ = run(capsys, "frontier", "example1", "--buyer", "0", "--alphas", "1,1/2")
    data = json.loads(out)
    assert code == 0 and data["best_response"]["alpha_interval"] == ["1/4", "1"]
    assert run(capsys, "frontier", "example1", "--buyer", "5")[0] == 1


def test_bounds_and_posted_price(capsys, tmp_path):
    code, out, _ = run(capsys, "bounds", "a4r", "--csv", str(tmp_path))
    assert code == 0 and json.loads(out)["revenue"]["ratio"] == "1/2"
    assert (tmp_path / "revenue_ratios.csv").exists()
    code, out, _ = run(capsys, "posted-price", "a4r", "--order", "0,1")
    assert code == 0 and json.loads(out)["rows"][0]["revenue"] == "2"
    assert run(capsys, "posted-price", "a4r", "--order", "0,0")[0] == 1


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "example1", "--K", "4", "--T", "2")
    assert code == 0 and json.loads(out)["count"] >= 1


def test_expect_seed_from_environment(capsys, monkeypatch):
    a = json.loads(run(capsys, "expect", "a2", "--samples", "2000")[1])
    monkeypatch.setenv("ROIPACE_SEED", "0")
    b = json.loads(run(capsys, "expect", "a2", "--samples", "2000")[1])
    assert a["payments"] == b["payments"] and b["seed"] == 0
    monkeypatch.setenv("ROIPACE_SEED", "5")
    c = json.loads(run(capsys, "expect", "a2", "--samples", "2000")[1])
    assert c["seed"] == 5


@pytest.mark.parametrize("example", ["ex1", "ex3", "a1", "a4w"])
def test_reproduce(capsys, example):
    code, out, _ = run(capsys, "reproduce", example)
    assert code == 0 and json.loads(out)["ok"]
