import csv
import json
import math

import numpy as np
import pytest

from lifespan_lab import cli, lab
from lifespan_lab import radiation_field as rfmod
from lifespan_lab.errors import InvalidArgument, NumericFailure
from lifespan_lab.radial_profiles import CaseTag, parse_profile
from lifespan_lab.radiation_field import lifespan_constants

BASE = {"epsilons": [0.2], "grid": {"refinement": "none"}}


@pytest.fixture(scope="module")
def small_sweep():
    return lab.sweep(lab.LabConfig.from_dict(BASE))


# --- configuration -----------------------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    {"colour": "red"},
    {"grid": {"mesh": 1}},
    {"grid": 0.02},
    {"epsilons": [0.1, -0.2]},
    {"grid": {"refinement": "sometimes"}},
    {"budgets": {"t_max": 0}},
    {"form": "weak"},
    {"wavespeed": "1+u^2", "epsilons": [0.2]},
])
def test_config_schema_rejects(bad):
    with pytest.raises(InvalidArgument):
        lab.LabConfig.from_dict(bad)


def test_config_hash_canonical():
    a = lab.LabConfig.from_dict({"epsilons": [0.1], "form": "divergence"})
    b = lab.LabConfig.from_dict({"form": "divergence", "epsilons": [0.1]})
    assert a.hash() == b.hash() and len(a.hash()) == 64
    assert a.hash() != a.with_epsilons([0.2]).hash()


def test_config_load_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(InvalidArgument):
        lab.LabConfig.load(p)
    with pytest.raises(InvalidArgument):
        lab.LabConfig.load(tmp_path / "missing.json")


# --- predictions -------------------------------------------------------------------------------------

def test_predict_zero_data():
    z = parse_profile("zero")
    p = lab.predict(z, z)
    assert p["tau0"] == p["nu0"] == math.inf
    assert all(v == math.inf for v in p["variants"].values())


def test_predict_delegates(poly_data, poly_rf):
    p = lab.predict(*poly_data)
    assert (p["tau0"], p["nu0"]) == lifespan_constants(poly_rf)
    assert p["variants"]["var_I"] == pytest.approx(2.0 * p["variants"]["div_I"], rel=1e-12)
    assert p["variants"]["var_II"] is None


@pytest.mark.parametrize("case, eps, T, expect", [("case_I", 0.1, 400.0, 2.0),
                                                  ("case_II", 0.5, math.e ** 4, 1.0)])
def test_scaled_lifespan(case, eps, T, expect):
    assert lab.scaled_lifespan(CaseTag(case), eps, T) == pytest.approx(expect)


def test_extrapolate_exact_law():
    rows = [lab.ScalingRow(e, 1.0, 2.0 + 0.5 * math.sqrt(e), 0.02, None, False, "h") for e in (0.2, 0.1, 0.05)]
    fit = lab.extrapolate(rows)
    assert fit["limit"] == pytest.approx(2.0) and fit["k"] == pytest.approx(0.5)
    assert fit["residual"] < 1e-12
    assert lab.extrapolate(rows[:1]) is None


# --- sweeps ------------------------------------------------------------------------------------------

def test_empty_sweep_prediction_only(tmp_path):
    rep = lab.sweep(lab.LabConfig.from_dict({}))
    assert rep.rows == [] and rep.extrapolation is None
    assert rep.prediction == lab.predict(parse_profile("zero"), parse_profile("poly:M=1,power=3,amp=1"))
    lab.report(rep, tmp_path)
    with open(tmp_path / "results.csv", newline="") as fh:
        assert list(csv.reader(fh)) == [list(lab.CSV_COLUMNS)]


def test_sweep_row(small_sweep, poly_rf):
    (row,) = small_sweep.rows
    assert not row.censored and row.T > 0
    assert row.scaled == 0.2 * math.sqrt(row.T)
    assert len(row.config_hash) == 64
    assert small_sweep.target == poly_rf.tau0


def test_sweep_rejects_large_eps():
    with pytest.raises(InvalidArgument):
        lab.sweep(lab.LabConfig.from_dict({"epsilons": [3.0]}))


def test_global_case_censored():
    cfg = lab.LabConfig.from_dict({"wavespeed": "1+u^3", "epsilons": [0.3, 0.2],
                                   "grid": {"refinement": "none"}, "budgets": {"t_max": 150.0}})
    assert cfg.case is CaseTag.GLOBAL
    rep = lab.sweep(cfg)
    assert [r.eps for r in rep.rows] == [0.3, 0.2]
    assert all(r.censored and r.T is None and r.scaled is None for r in rep.rows)


def test_report_round_trip(small_sweep, tmp_path):
    paths = lab.report(small_sweep, tmp_path)
    assert {p.name for p in paths} >= {"results.csv", "summary.json", "scaled_vs_eps.dat", "scaling.gp"}
    back = lab.load_report(tmp_path)
    assert back == small_sweep
    with open(tmp_path / "results.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert all(len(r) == 7 for r in rows) and len(rows) == 2


def test_sweep_deterministic(small_sweep, tmp_path):
    lab.report(small_sweep, tmp_path / "a")
    lab.report(lab.sweep(lab.LabConfig.from_dict(BASE)), tmp_path / "b")
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_report_io_error(small_sweep, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        lab.report(small_sweep, blocker / "sub")


# --- CLI ---------------------------------------------------------------------------------------------

def test_cli_radiation(tmp_path, capsys, poly_rf):
    assert cli.main(["radiation", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tau0"] == pytest.approx(poly_rf.tau0)
    assert (tmp_path / "radiation.csv").exists()


def test_cli_profile(tmp_path, capsys):
    assert cli.main(["profile", "--out", str(tmp_path), "--tau", "0,1", "--points", "101"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["variant"] == "div_I"
    with open(tmp_path / "profile.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == 1 + 2 * 101


def test_cli_profile_past_blowup(tmp_path):
    assert cli.main(["profile", "--out", str(tmp_path), "--tau", "5"]) == 2


def test_cli_riccati(tmp_path, capsys):
    t = np.linspace(1.0, 3.0, 201)
    track = tmp_path / "track.csv"
    with open(track, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "a0", "a1", "a2"])
        w.writerows([x, 1.0, 0.0, 0.0] for x in t)
    assert cli.main(["riccati", "--track", str(track), "--w-start", "1.0", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["oracle_blowup"] == pytest.approx(2.0, abs=1e-6)
    assert out["bound"] == pytest.approx(2.0, abs=1e-6)


def test_cli_simulate_and_sweep_report(tmp_path, capsys):
    sim_dir = tmp_path / "sim"
    assert cli.main(["simulate", "--eps", "0.2", "--t-max", "20", "--snapshots", "10",
                     "--out", str(sim_dir)]) == 0
    assert json.loads(capsys.readouterr().out)["outcome"] == "censored"
    assert (sim_dir / "manifest.json").exists() and list(sim_dir.glob("snapshot_t*.csv"))

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilons": [0.3], "grid": {"refinement": "none"}}))
    sweep_dir = tmp_path / "sweep"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(sweep_dir)]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("case case_I")
    assert cli.main(["report", str(sweep_dir)]) == 0
    assert capsys.readouterr().out == printed


@pytest.mark.parametrize("argv", [
    ["radiation", "--eps", "x,y"],
    ["bogus"],
    ["simulate", "--eps", "0.1,0.2"],
    ["radiation", "--wavespeed", "sideways"],
])
def test_cli_config_errors(argv, tmp_path):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2


def test_cli_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilons": [0.1], "extra": 1}))
    assert cli.main(["radiation", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_numeric_failure(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericFailure("quadrature did not converge")

    monkeypatch.setattr(rfmod, "radiation_field", boom)
    assert cli.main(["radiation", "--out", str(tmp_path)]) == 3
