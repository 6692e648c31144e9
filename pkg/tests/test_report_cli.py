import csv
import json
import os

import numpy as np
import pytest

from precipopt import report as rp
from precipopt.calibration import evaluate_candidate
from precipopt.cli import main
from precipopt.config import RunConfig, load_config
from precipopt.uncertainty import worst_case

SMALL = "[grid]\nN_t = 20\n"


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(SMALL)
    return str(p)


def test_simulate_outputs(tmp_path, small_cfg):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", small_cfg, "--out", str(out)]) == 0
    head, rows = read_csv(out / "timeseries.csv")
    assert head == ["t", "v", "v_perturbed", "c", "c_tot", "nucleation_rate", "growth_rate"]
    assert len(rows) == 21
    head, rows = read_csv(out / "psd.csv")
    assert head == ["x_nm", "q", "nucleation_time"]
    rep = json.loads((out / "report.json").read_text())
    sim = rep["simulation"]
    ms = sim["moments"]
    assert sim["mean"] == pytest.approx(ms["m1"] / ms["m0"], rel=1e-15)
    assert sim["mass_balance_max_abs"] <= 1e-12


def test_csv_round_trip(tmp_path):
    cfg = RunConfig()
    grid = cfg.time_grid()
    v = cfg.admissible_set(grid).project(np.random.default_rng(0).uniform(0, 1, grid.n))
    path = tmp_path / "v.csv"
    rp.write_control(path, v, grid)
    assert np.array_equal(rp.read_control(path, grid.n), v)


def test_robust_then_evaluate_round_trip(tmp_path, small_cfg):
    out = tmp_path / "rob"
    assert main(["optimize-robust", "--config", small_cfg, "--out", str(out)]) == 0
    for name in ("nominal.csv", "robust.csv", "trace_robust.csv", "scenarios_robust.csv", "timeseries.csv",
                 "psd.csv", "report.json", "timings.json"):
        assert (out / name).exists(), name
    rep = json.loads((out / "report.json").read_text())
    stored = rep["processes"]["robust"]["worst"]["objective"]
    assert rep["optimizer"]["robust"]["value"] == stored
    head, _ = read_csv(out / "trace_robust.csv")
    assert head == ["outer", "inner", "h_center", "trial_value", "rho", "tau", "planes", "serious", "scenario"]
    ev = tmp_path / "ev"
    assert main(["evaluate", "--config", small_cfg, "--control", str(out / "robust.csv"), "--out", str(ev)]) == 0
    rep2 = json.loads((ev / "report.json").read_text())
    assert abs(rep2["processes"]["input"]["worst"]["objective"] - stored) <= 1e-10
    # every stored control re-evaluates to its stored objectives
    cfg = load_config(small_cfg)
    for proc in ("nominal", "robust"):
        block = rep["processes"][proc]
        again = rp.evaluate_scenarios(np.array(block["control"]), cfg)
        assert np.max(np.abs(again.values - np.array(block["objective_values"]))) <= 1e-10


def test_evaluation_rows(cfg, model, aset):
    v = aset.uniform()
    ev = rp.evaluate_scenarios(v, cfg, model)
    assert ev.nominal_row.level1 == ev.nominal_row.level2 == 1.0
    assert ev.nominal_row.objective == model.objective(v)
    wc = worst_case(v, cfg.uncertainty_set(), model)
    assert ev.worst_row.objective == wc.value and ev.worst == wc.index
    for r in ev.rows[:5]:
        assert r.mean == pytest.approx(r.m1 / r.m0, rel=1e-15)
        assert r.variance == pytest.approx(r.m2 / r.m0 - (r.m1 / r.m0) ** 2, rel=1e-12, abs=1e-15)


def test_sweep_command(tmp_path, small_cfg):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", small_cfg, "--out", str(out), "--sizes", "0", "10"]) == 0
    head, rows = read_csv(out / "sweep.csv")
    assert head == ["size_pct", "nominal_nominal", "nominal_worst", "robust_nominal", "robust_worst"]
    assert len(rows) == 2
    zero = [float(x) for x in rows[0][1:]]
    assert max(zero) - min(zero) <= 1e-6


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["evaluate", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--uncertainty-size", "abc"]) == 2


def test_runtime_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[uncertainty]\nu_l = 1.2\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 1
    ctl = tmp_path / "short.csv"
    ctl.write_text("v\n1.0\n2.0\n")
    assert main(["evaluate", "--control", str(ctl), "--out", str(tmp_path)]) == 1


def test_calibrated_defaults_pass_their_checks():
    cand = evaluate_candidate(3.0, 2.0, 2.5)
    assert cand.accepted, cand.reason
    assert abs(cand.nominal_mean - 4.0) <= 0.05 * 4.0
