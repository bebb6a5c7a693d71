"""Acceptance battery at the stated tolerances.

The full battery runs twice through ``nsrlab validate --suite all`` at a
budget of 1e6 samples; the first run's measurements feed every per-criterion
assertion below and the pair feeds the determinism check.  Each test prints
one PASS/FAIL line (collected in the terminal summary by conftest.py).
"""

import json

import pytest

from nsrlab.cli import main

BUDGET = "1e6"
SEED = 0
LINES: list[str] = []


@pytest.fixture(scope="module")
def battery(tmp_path_factory):
    d = tmp_path_factory.mktemp("validate")
    codes = [main(["validate", "--suite", "all", "--budget", BUDGET, "--seed", str(SEED), "--json", str(d / f"{k}.json")])
             for k in ("a", "b")]
    a, b = (d / "a.json").read_bytes(), (d / "b.json").read_bytes()
    parsed = json.loads(a)
    return {"codes": codes, "a": a, "b": b, "by_id": {c["id"]: c for c in parsed["criteria"]}}


def report(cid: int, ok: bool, detail: str):
    line = f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok


def measured(battery, cid):
    return battery["by_id"][cid]["measured"]


def test_criterion_01_closed_forms(battery):
    m = measured(battery, 1)
    ok = m["max_rel_err"] <= 1e-10 and m["runtime_ok"]
    assert report(1, ok, f"max rel err {m['max_rel_err']:.2e} (<= 1e-10), runtime < 5 s: {m['runtime_ok']}")


def test_criterion_02_eighth_moment(battery):
    v = measured(battery, 2)["value"]
    assert report(2, abs(v - 105.0) <= 1e-12, f"IS = {v!r} (105 +- 1e-12)")


def test_criterion_03_fourth_order_vs_mc(battery):
    m = measured(battery, 3)
    ok = m["max_abs_z"] <= 3.0 and len(m["z"]) == 20 and m["runtime_ok"]
    assert report(3, ok, f"max |z| {m['max_abs_z']:.2f} over {len(m['z'])} instances (<= 3), runtime < 2 min")


def test_criterion_04_w_identities(battery):
    m = measured(battery, 4)
    ok = m["max_abs_z"] <= 3.0 and m["scalar_case"] == 78.0 and len(m["z"]) == 12
    assert report(4, ok, f"max |z| {m['max_abs_z']:.2f} (<= 3); m=1 squared case {m['scalar_case']!r} (== 78)")


def test_criterion_05_one_step_vs_mc(battery):
    m = measured(battery, 5)
    ok = abs(m["z_K"]) <= 3 and abs(m["z_ell"]) <= 3 and m["runtime_ok"]
    assert report(5, ok, f"z_K {m['z_K']:.2f}, z_ell {m['z_ell']:.2f} (|z| <= 3), runtime < 1 min")


def test_criterion_06_multi_step_vs_mc(battery):
    m = measured(battery, 6)
    zs = [abs(m[f"T{T}"][k]) for T in (2, 3, 5) for k in ("z_K", "z_ell")]
    ok = max(zs) <= 3 and m["T1_rel_err"] <= 1e-10
    assert report(6, ok, f"max |z| {max(zs):.2f} (<= 3); T=1 rel err {m['T1_rel_err']:.1e} (<= 1e-10)")


def test_criterion_07_gradients_vs_fd(battery):
    m = measured(battery, 7)
    assert report(7, m["max_rel_err"] <= 1e-6, f"max rel err {m['max_rel_err']:.2e} (<= 1e-6) on 50 systems")


def test_criterion_08_lifted_decomposition(battery):
    m = measured(battery, 8)
    assert report(8, m["max_abs_err"] <= 1e-9, f"max |R + (x+2y+z)| {m['max_abs_err']:.2e} (<= 1e-9)")


def test_criterion_09_bound_and_sandwich(battery):
    m = measured(battery, 9)
    ok = (m["max_var_minus_bound_K"] <= 1e-12 and m["max_var_minus_bound_ell"] <= 1e-12
          and m["sandwich_violation"] <= 1e-10)
    assert report(9, ok, f"max var-bound K {m['max_var_minus_bound_K']:.3g}, ell {m['max_var_minus_bound_ell']:.3g} "
                         f"(<= 1e-12); sandwich violation {m['sandwich_violation']:.1e}")


def test_criterion_10_horizon_scaling(battery):
    m = measured(battery, 10)
    ok = m["ratio_rho_0.95"] <= 2 and m["ratio_rho_1.05"] >= 10 and m["rho_1_r2"] >= 0.98 and m["runtime_ok"]
    assert report(10, ok, f"ratios {m['ratio_rho_0.95']:.2f} (<= 2), {m['ratio_rho_1.05']:.1f} (>= 10); "
                          f"R^2 {m['rho_1_r2']:.4f} (>= 0.98)")


def test_criterion_11_alpha_slope(battery):
    m = measured(battery, 11)
    assert report(11, 0.9 <= m["slope"] <= 1.1, f"slope {m['slope']:.4f} (in [0.9, 1.1])")


def test_criterion_12_logstd_gradient_sign(battery):
    m = measured(battery, 12)
    assert report(12, m["max_grad_ell"] < 0, f"largest grad_ell component {m['max_grad_ell']:.3g} (< 0)")


def test_criterion_13_poly_vs_lqg(battery):
    rel = measured(battery, 13)["rel_err"]
    worst = max(rel.values())
    assert report(13, worst <= 1e-8, f"max rel err {worst:.1e} (<= 1e-8) over {sorted(rel)}")


def test_criterion_14_quadratic_vs_mc(battery):
    m = measured(battery, 14)
    ok = m["max_abs_z"] <= 3 and m["exact_runtime_ok"] and len(m["z"]) == 5
    assert report(14, ok, f"max |z| {m['max_abs_z']:.2f} (<= 3), exact path < 1 min")


def test_criterion_15_mlp_jacobian(battery):
    m = measured(battery, 15)
    assert report(15, m["max_rel_err"] <= 1e-6, f"max rel err {m['max_rel_err']:.1e} (<= 1e-6) on 20 architectures")


def test_criterion_16_generic_bound(battery):
    m = measured(battery, 16)
    seeds = m["seeds"]
    ok = len(seeds) == 10 and m["runtime_ok"] and all(
        s["bound_theta"] >= s["mc_theta"] - 3 * s["mc_theta_se"] and s["bound_ell"] >= s["mc_ell"] - 3 * s["mc_ell_se"]
        for s in seeds)
    worst = min(min(s["bound_theta"] / s["mc_theta"], s["bound_ell"] / s["mc_ell"]) for s in seeds)
    assert report(16, ok, f"10 seeds, smallest bound/MC ratio {worst:.1f} (bound >= MC - 3 SE), runtime < 5 min")


def test_criterion_17_trajectories(battery):
    m = measured(battery, 17)
    ok = (m["objective_nondecreasing"] and m["ell_strictly_decreasing"] and m["nsr_final"] >= m["nsr_initial"]
          and m["sgd_collapsed"] >= 11)
    assert report(17, ok, f"GD monotone {m['objective_nondecreasing']}, ell decreasing {m['ell_strictly_decreasing']}, "
                          f"NSR {m['nsr_initial']:.4g} -> {m['nsr_final']:.4g}; SGD collapse {m['sgd_collapsed']}/20 "
                          f"(>= 11)")


def test_criterion_18_determinism(battery):
    same = battery["a"] == battery["b"]
    assert report(18, same, f"two --suite all runs, machine JSON byte-identical: {same}")


def test_battery_exit_code(battery):
    assert battery["codes"] == [0, 0]
