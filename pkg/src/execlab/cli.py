"""Command-line front end: ecf, optimize, sweep, validate."""

from __future__ import annotations

import csv
import io
import math
import sys
from pathlib import Path

import click

from .config import ConfigError, RunConfig, load_config
from .market import Decision, ExecutionProblem, InvalidParameters, validate
from .multi_period import PeriodState, mecf, optimize_first_step, two_period_candidates
from .single_period import ecf, solve_single_period
from .sweeps import COLUMNS, SweepSpec, linspace, preset, run_sweeps
from .validation import run_validation


def fmt(value) -> str:
    """17 significant digits for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.17g}"
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _load(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        cfg = load_config(path)
    except (OSError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from None
    errors = cfg.errors()
    if errors:
        raise click.ClickException("invalid config: " + "; ".join(errors))
    return cfg


@click.group()
def main():
    """Optimal limit/market order placement experiments."""


@main.command("ecf")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--y", "y", type=float, required=True, help="limit offset above the mid-price")
@click.option("--m", "m", type=float, required=True, help="market order size")
def cmd_ecf(config, y, m):
    """Expected cash flow of one decision, split by leg."""
    cfg = _load(config)
    dec = Decision(y, m)
    problem = ExecutionProblem(cfg.problem.inventory, cfg.problem.horizon, 1)
    errors = validate(cfg.model, cfg.lob, problem, dec)
    if errors:
        raise click.ClickException("invalid decision: " + "; ".join(errors))
    b = ecf(dec, cfg.model, cfg.lob, problem)
    click.echo(render_csv(("y", "m", "total", "mo_now", "lo_filled", "terminal_mo"),
                          [(y, m, b.total, b.mo_now, b.lo_filled, b.terminal_mo)]), nl=False)


@main.command("optimize")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--periods", type=int, default=None, help="number of periods (defaults to the config)")
@click.option("--verbose", is_flag=True, help="write the candidate table to a side file")
@click.option("--candidates-out", type=click.Path(dir_okay=False), default="candidates.csv",
              show_default=True)
def cmd_optimize(config, periods, verbose, candidates_out):
    """Optimal first-period (y, m)."""
    cfg = _load(config)
    n = cfg.problem.periods if periods is None else periods
    if n < 1:
        raise click.ClickException("periods must be >= 1")
    problem = ExecutionProblem(cfg.problem.inventory, cfg.problem.horizon, n)
    cand_rows = []
    if n == 1:
        res = solve_single_period(problem.inventory, problem.horizon, cfg.model, cfg.lob)
        y, m, value, method = res.y_star, res.m_star, res.value, res.method.value
        cand_rows = [(label, cm, v) for label, cm, v in res.candidates]
    else:
        step = optimize_first_step(n, cfg.model, cfg.lob, problem)
        y, m, value, method = step.y, step.m, step.value, "DynamicProgram"
        if n == 2 and cfg.model.is_bm and cfg.model.mu < 0:
            state = PeriodState(cfg.model.s0, problem.inventory, problem.horizon, 2)
            cand_rows = [(label, cm, mecf(2, state, Decision(cfg.lob.d, cm), cfg.model, cfg.lob))
                         for label, cm in two_period_candidates(cfg.model, cfg.lob, problem)]
    click.echo(render_csv(("n", "y_star", "m_star", "value", "method"), [(n, y, m, value, method)]), nl=False)
    if verbose:
        Path(candidates_out).write_text(render_csv(("label", "m", "value"), cand_rows))


@main.command("sweep")
@click.argument("config", type=click.Path(dir_okay=False), required=False)
@click.option("--preset", "preset_name", default=None, help="fig1 ... fig5")
@click.option("--axis", default=None, help="config key to vary")
@click.option("--from", "lo", type=float, default=None)
@click.option("--to", "hi", type=float, default=None)
@click.option("--points", type=int, default=101, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (stdout if omitted)")
def cmd_sweep(config, preset_name, axis, lo, hi, points, out):
    """Optimal decisions along one parameter axis, or a figure preset."""
    if preset_name:
        if axis or config:
            raise click.ClickException("--preset cannot be combined with a config or --axis")
        try:
            specs = preset(preset_name)
        except ValueError as exc:
            raise click.ClickException(str(exc)) from None
    else:
        if config is None or axis is None or lo is None or hi is None:
            raise click.ClickException("need CONFIG, --axis, --from and --to (or --preset)")
        try:
            specs = [SweepSpec(_load(config), axis, linspace(lo, hi, points))]
        except ValueError as exc:
            raise click.ClickException(str(exc)) from None
    try:
        rows = run_sweeps(specs)
    except (ValueError, InvalidParameters) as exc:
        raise click.ClickException(str(exc)) from None
    if preset_name:
        header = ("fixture",) + COLUMNS
        body = [(r.fixture, r.axis_value, r.y_star, r.m_star, r.value, r.t0, r.kappa) for r in rows]
    else:
        header = COLUMNS
        body = [(r.axis_value, r.y_star, r.m_star, r.value, r.t0, r.kappa) for r in rows]
    _emit(render_csv(header, body), out)


@main.command("validate")
@click.argument("config", type=click.Path(dir_okay=False), required=False)
@click.option("--paths", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--steps", type=int, default=16, show_default=True, help="time steps per period")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="comparison CSV (stdout if omitted)")
@click.option("--adjudications", "adj_out", type=click.Path(dir_okay=False), default=None,
              help="adjudication CSV")
@click.option("--tamper", is_flag=True, hidden=True)
def cmd_validate(config, paths, seed, steps, out, adj_out, tamper):
    """Compare every analytic value with simulation; exit 1 beyond 4 SE."""
    cfg = _load(config) if config else None
    if paths < 2:
        raise click.ClickException("--paths must be >= 2")
    report = run_validation(paths=paths, seed=seed, cfg=cfg, tamper=tamper, steps=steps)
    rows = [(r.check, r.fixture, r.quantity, r.analytic, r.mc_mean, r.std_error, r.z, r.verdict)
            for r in report.rows]
    _emit(render_csv(("check", "fixture", "quantity", "analytic", "mc_mean", "std_error", "z", "verdict"), rows),
          out)
    adj = render_csv(("formula_id", "variant_chosen", "evidence"),
                     [(a.formula_id, a.variant_chosen, a.evidence) for a in report.adjudications])
    if adj_out:
        Path(adj_out).write_text(adj)
    err = click.get_text_stream("stderr")
    for a in report.adjudications:
        err.write(f"adjudication {a.formula_id}: {a.variant_chosen} ({a.evidence})\n")
    counts = {}
    for r in report.rows:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    err.write("verdicts: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())) + "\n")
    if not report.ok:
        for r in report.failed:
            err.write(f"FAIL {r.check} {r.fixture} {r.quantity}: z={r.z:.2f}\n")
        sys.exit(1)


if __name__ == "__main__":
    main()
