import csv
import json
import math

import pytest

from minkhyp.cli import RunConfig, main, run


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_profile_c0(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["profile", "--c", "0", "--n", "2", "--tmax", "10", "--out", str(out)]) == 0
    last = rows(out)[-1]
    assert float(last["t"]) == 10.0
    assert abs(float(last["f"]) - math.sqrt(101)) < 1e-9


def test_profile_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["--seed", "3", "profile", "--c", "-1", "--tmax", "5", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_lambda_table(tmp_path):
    assert main(["lambda-table", "--c=-3,0,0.5", "--out", str(tmp_path)]) == 0
    tab = json.loads((tmp_path / "lambda_n2.json").read_text())["table"]
    lam = {r["c"]: r["lambda"] for r in tab}
    assert lam[0.0] == 0.0 and lam[-3.0] < 0 < lam[0.5]


def test_validation_exit_codes(tmp_path, capsys):
    assert main(["profile", "--c", "2"]) == 1
    assert main(["profile", "--c", "0", "--tmax", "-1"]) == 1
    assert main(["ma-solve", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["ma-solve", "--config", str(bad)]) == 1
    assert run(RunConfig("nonsense")) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    # the profile integration cannot reach this first-integral tolerance
    assert main(["profile", "--c", "0.5", "--tol", "1e-30", "--out", str(tmp_path)]) == 2


def test_conjugate_and_cone(tmp_path, capsys):
    assert main(["conjugate", "--c", "0.5", "--samples", "16", "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "conjugate_c0.5.csv")
    assert len(r) == 16
    assert max(abs(float(x["ustar"]) - float(x["trace_oracle"])) for x in r) < 2e-3
    assert main(["cone", "--c", "0", "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["hausdorff_to_ball"] < 0.05


def test_blowdown(tmp_path, capsys):
    assert main(["blowdown", "--c", "0", "--x", "3,4", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "blowdown_c0.json").read_text())
    assert abs(d["entries"][0]["value"] - 5.0) < 1e-3


def test_ma_solve_disk(tmp_path, capsys):
    cfg = {"domain": {"kind": "disk", "radius": 1.0}, "eta": {"kind": "constant", "value": 1.0},
           "boundary": {"kind": "constant", "params": {"value": 0.0}}, "grid_h": 1 / 32}
    p = tmp_path / "disk.json"
    p.write_text(json.dumps(cfg))
    assert main(["ma-solve", "--config", str(p), "--mode", "fixed", "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["interior_max_error"] < 5e-3 and rep["residual_inf"] < 1e-9
    sol = rows(tmp_path / "o" / "solution.csv")
    assert set(sol[0]) == {"y1", "y2", "v", "residual"}


def test_verify_subset(tmp_path, capsys):
    assert main(["verify", "--ids", "1,2", "--out", str(tmp_path)]) == 0
    led = json.loads((tmp_path / "ledger.json").read_text())
    assert led["passed"] and [c["id"] for c in led["criteria"]] == [1, 2]
