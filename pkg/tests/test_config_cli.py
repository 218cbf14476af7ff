import csv
import io
from pathlib import Path

import pytest
from click.testing import CliRunner

from execlab.cli import fmt, main
from execlab.config import ConfigError, RunConfig, dump_config, parse_config
from execlab.market import PriceModel

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FIG1 = str(CONFIGS / "fig1.cfg")


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- config grammar -------------------------------------------------------------


def test_parse_defaults_and_overrides():
    cfg = parse_config("model = gbm\nmu = 0.25  # drift\n\n# comment only\nperiods = 3\n")
    assert cfg.model.kind is PriceModel.GEOMETRIC_BM
    assert cfg.model.mu == 0.25
    assert cfg.problem.periods == 3
    assert cfg.lob == RunConfig().lob


@pytest.mark.parametrize("text, message", [
    ("mu 0.1", "expected"),
    ("drift = 0.1", "unknown key"),
    ("mu = 0.1\nmu = 0.2", "duplicate"),
    ("mu = fast", "line 1"),
    ("periods = 1.5", "integer"),
    ("model = levy", "line 1"),
])
def test_parse_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_dump_round_trips():
    cfg = parse_config((CONFIGS / "fig2.cfg").read_text())
    assert parse_config(dump_config(cfg)) == cfg


def test_invalid_values_surface_from_validation():
    cfg = parse_config("rho = 1.5\nsigma = -1")
    assert len(cfg.errors()) == 2


def test_fmt_round_trips_doubles():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt(float("nan")) == "" and fmt(3) == "3"


# -- commands --------------------------------------------------------------------


def test_ecf_command():
    res = CliRunner().invoke(main, ["ecf", FIG1, "--y", "0.005", "--m", "100"])
    assert res.exit_code == 0, res.output
    row = _rows(res.output)[0]
    assert list(row) == ["y", "m", "total", "mo_now", "lo_filled", "terminal_mo"]
    assert float(row["total"]) == pytest.approx(9909.2, rel=1e-12)


def test_ecf_rejects_bad_decision_and_config(tmp_path):
    res = CliRunner().invoke(main, ["ecf", FIG1, "--y", "0.001", "--m", "10"])
    assert res.exit_code != 0 and "invalid decision" in res.output
    bad = tmp_path / "bad.cfg"
    bad.write_text("rho = 2\n")
    res = CliRunner().invoke(main, ["ecf", str(bad), "--y", "0.01", "--m", "10"])
    assert res.exit_code != 0 and "rho" in res.output
    res = CliRunner().invoke(main, ["ecf", str(tmp_path / "missing.cfg"), "--y", "0.01", "--m", "1"])
    assert res.exit_code != 0


def test_optimize_single_period_with_candidates(tmp_path):
    side = tmp_path / "cands.csv"
    res = CliRunner().invoke(main, ["optimize", FIG1, "--verbose", "--candidates-out", str(side)])
    assert res.exit_code == 0, res.output
    row = _rows(res.output)[0]
    assert row["method"] == "ClosedForm"
    assert float(row["m_star"]) == pytest.approx(40.75609756097561, rel=1e-12)
    cands = _rows(side.read_text())
    assert max(float(c["value"]) for c in cands) == pytest.approx(float(row["value"]), rel=1e-15)


def test_optimize_two_periods_writes_closed_form_candidates(tmp_path):
    side = tmp_path / "cands.csv"
    res = CliRunner().invoke(main, ["optimize", FIG1, "--periods", "2", "--verbose", "--candidates-out", str(side)])
    assert res.exit_code == 0, res.output
    row = _rows(res.output)[0]
    assert row["n"] == "2" and row["method"] == "DynamicProgram"
    assert float(row["y_star"]) == 0.005
    assert len(_rows(side.read_text())) > 3


def test_optimize_rejects_zero_periods():
    res = CliRunner().invoke(main, ["optimize", FIG1, "--periods", "0"])
    assert res.exit_code != 0


def test_sweep_axis(tmp_path):
    out = tmp_path / "s.csv"
    res = CliRunner().invoke(main, ["sweep", str(CONFIGS / "fig2.cfg"), "--axis", "horizon",
                                    "--from", "0.05", "--to", "0.3", "--points", "6", "--out", str(out)])
    assert res.exit_code == 0, res.output
    rows = _rows(out.read_text())
    assert list(rows[0]) == ["axis_value", "y_star", "m_star", "value", "t0", "kappa"]
    assert len(rows) == 6
    assert all(r["t0"] for r in rows)
    assert float(rows[0]["y_star"]) == 0.005 and float(rows[-1]["y_star"]) > 0.005


def test_sweep_negative_drift_leaves_threshold_blank():
    res = CliRunner().invoke(main, ["sweep", FIG1, "--axis", "mu", "--from", "-1", "--to", "-0.1", "--points", "3"])
    assert res.exit_code == 0, res.output
    assert all(r["t0"] == "" and r["kappa"] == "" for r in _rows(res.output))


@pytest.mark.parametrize("args", [
    ["sweep", FIG1, "--axis", "colour", "--from", "0", "--to", "1"],
    ["sweep", FIG1, "--axis", "mu"],
    ["sweep", "--preset", "fig9"],
    ["sweep", FIG1, "--preset", "fig1"],
    ["sweep", FIG1, "--axis", "rho", "--from", "0", "--to", "2", "--points", "3"],
])
def test_sweep_errors(args):
    assert CliRunner().invoke(main, args).exit_code != 0


def test_validate_runs_and_tamper_fails(tmp_path):
    out, adj = tmp_path / "v.csv", tmp_path / "a.csv"
    args = ["validate", "--paths", "20000", "--out", str(out), "--adjudications", str(adj)]
    res = CliRunner().invoke(main, args)
    assert res.exit_code == 0, res.output
    assert {"gbm_restricted_expectation", "hit_branch_cleanup_size"} <= {r["formula_id"] for r in _rows(adj.read_text())}
    bad = CliRunner().invoke(main, args + ["--tamper"])
    assert bad.exit_code != 0
    assert any(r["verdict"] == "fail" and r["check"] == "ecf_single" for r in _rows(out.read_text()))


def test_validate_with_config_and_bad_paths():
    res = CliRunner().invoke(main, ["validate", FIG1, "--paths", "1"])
    assert res.exit_code != 0
