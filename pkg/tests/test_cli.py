import json
import math
from pathlib import Path

import numpy as np
import pytest

from nsrlab.cli import content_hash, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _csv_rows(path):
    return path.read_text().splitlines()


def test_nsr_point_report(tmp_path, capsys):
    assert main(["nsr", "--system", "double-integrator", "--policy", "default", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "nsr_report.json").read_text())
    assert rep["method"] == "exact"
    assert rep["nsr"] > 0
    assert (tmp_path / "nsr_report.manifest.json").exists()


def test_unknown_system_exits_2(tmp_path, capsys):
    assert main(["nsr", "--system", "nope", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "double-integrator" in err and "quadratic-1d" in err


def test_missing_policy_file_exits_2(tmp_path):
    assert main(["nsr", "--system", "double-integrator", "--policy", str(tmp_path / "x.json"),
                 "--out", str(tmp_path)]) == 2


def test_zero_gradient_exits_3(tmp_path):
    sys_json = json.loads((CONFIGS / "double_integrator_T30.json").read_text())
    for key in ("Qs", "Qa"):
        sys_json[key]["data"] = [0.0] * len(sys_json[key]["data"])
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(sys_json))
    assert main(["nsr", "--system", f"linear:{path}", "--out", str(tmp_path / "o")]) == 3


def test_grid_emits_steps_squared_rows_and_one_manifest(tmp_path):
    out = tmp_path / "g"
    assert main(["nsr", "--system", "double-integrator", "--grid", "sigma0,sigma,0.1,10,6", "--log",
                 "--out", str(out)]) == 0
    assert len(_csv_rows(out / "nsr_grid.csv")) == 36 + 1
    man = json.loads((out / "nsr_grid.manifest.json").read_text())
    assert man["output"] == "nsr_grid.csv" and man["command"] == "nsr"
    assert sorted(p.name for p in out.iterdir()) == ["nsr_grid.csv", "nsr_grid.manifest.json"]


def test_parameter_grid_on_poly_system(tmp_path):
    out = tmp_path / "pg"
    assert main(["nsr", "--system", "quadratic-1d", "--T", "2", "--grid", "0,1,-1,0,3", "--out", str(out)]) == 0
    assert len(_csv_rows(out / "nsr_grid.csv")) == 10


def test_bad_grid_spec_exits_2(tmp_path):
    assert main(["nsr", "--system", "double-integrator", "--grid", "0,1,2", "--out", str(tmp_path)]) == 2


def test_horizon_sweep_rows(tmp_path):
    assert main(["horizon-sweep", "--rho", "0.95,1.05", "--T-max", "20", "--out", str(tmp_path)]) == 0
    rows = _csv_rows(tmp_path / "horizon_sweep.csv")
    assert rows[0] == "rho,T,variance,nsr" and len(rows) == 41


def test_horizon_sweep_overflow_exits_4(tmp_path):
    assert main(["horizon-sweep", "--rho", "3.0", "--T-max", "200", "--out", str(tmp_path)]) == 4
    rows = _csv_rows(tmp_path / "horizon_sweep.csv")
    assert 1 < len(rows) < 201
    assert all(math.isfinite(float(r.split(",")[2])) for r in rows[1:])


def test_gd_optimize_monotone_and_rerun_identical(tmp_path):
    args = ["optimize", "--problem", "double-integrator", "--T", "10", "--iters", "300", "--method", "gd"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    obj = np.array([float(r.split(",")[1]) for r in a.decode().splitlines()[1:]])
    assert np.all(np.diff(obj) >= 0)
    ma = json.loads((tmp_path / "a" / "trajectory.manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "trajectory.manifest.json").read_text())
    assert ma["hash"] == mb["hash"]


def test_sgd_collapse_exits_5_with_partial_csv(tmp_path):
    out = tmp_path / "sgd"
    code = main(["optimize", "--problem", "quadratic-1d", "--T", "3", "--policy",
                 str(CONFIGS / "quadratic1d_sgd_start.json"), "--method", "sgd", "--lr", "0.1", "--batch", "4",
                 "--iters", "1000", "--seed", "0", "--out", str(out)])
    assert code == 5
    man = json.loads((out / "trajectory.manifest.json").read_text())
    assert man["config"]["reason"] in ("params_nonfinite", "logstd_runaway", "diverged_rollout")
    assert 1 < len(_csv_rows(out / "trajectory.csv")) < 1002


def test_adam_shipped_run_nsr_grows(tmp_path):
    out = tmp_path / "adam"
    assert main(["optimize", "--problem", "double-integrator", "--T", "30", "--method", "adam",
                 "--batch", "64", "--out", str(out)]) == 0
    rows = [r.split(",") for r in _csv_rows(out / "trajectory.csv")[1:]]
    nsrs = [float(r[4]) for r in rows if r[4] != "nan"]
    assert len(rows) == 2001
    assert nsrs[-1] > nsrs[0]


def test_gd_on_pendulum_is_config_error(tmp_path):
    assert main(["optimize", "--problem", "pendulum", "--method", "gd", "--iters", "2",
                 "--out", str(tmp_path)]) == 2


def test_bound_command(tmp_path, capsys):
    assert main(["bound", "--T", "10", "--rollouts", "10000", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "bound_report.json").read_text())
    assert rep["bound_theta"] >= rep["mc_second_moment_theta"]


def test_validate_budget_too_small_exits_2(capsys):
    assert main(["validate", "--suite", "poly", "--budget", "1e4"]) == 2
    assert "budget" in capsys.readouterr().err


def test_validate_exact_suite_passes(tmp_path, capsys):
    assert main(["validate", "--suite", "one-step", "--budget", "1e5", "--json", str(tmp_path / "v.json")]) == 0
    got = json.loads((tmp_path / "v.json").read_text())
    assert [c["id"] for c in got["criteria"]] == [5, 11]
    assert "PASS" in capsys.readouterr().out


def test_content_hash_depends_on_inputs(tmp_path):
    f = tmp_path / "in.json"
    f.write_text("{}")
    h1 = content_hash({"a": 1}, [str(f)])
    f.write_text("{ }")
    assert content_hash({"a": 1}, [str(f)]) != h1
    assert content_hash({"a": 2}, []) != content_hash({"a": 1}, [])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
