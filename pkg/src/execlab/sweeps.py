"""Parameter sweeps and the built-in figure presets."""

from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import KEYS, RunConfig
from .fixtures import BASE_LOB, BASE_PROBLEM, bm, gbm
from .market import ExecutionProblem, LobParams, ModelParams, ensure_valid
from .montecarlo import thread_count
from .multi_period import optimize_first_step
from .single_period import kappa, solve_single_period, t0_threshold

COLUMNS = ("axis_value", "y_star", "m_star", "value", "t0", "kappa")


@dataclass(frozen=True)
class SweepSpec:
    base: RunConfig
    axis: str
    values: tuple[float, ...]
    fixture_name: str = ""

    def __post_init__(self):
        if self.axis not in KEYS or self.axis == "model":
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")


@dataclass(frozen=True)
class SweepRow:
    fixture: str
    axis_value: float
    y_star: float
    m_star: float
    value: float
    t0: float | None
    kappa: float | None


def linspace(lo: float, hi: float, points: int) -> tuple[float, ...]:
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        return (float(lo),)
    return tuple(float(v) for v in np.linspace(lo, hi, points))


@functools.lru_cache(maxsize=4096)
def _threshold(model: ModelParams, lob: LobParams, inventory: float):
    """(t0, kappa) for a positive arithmetic drift; None where undefined."""
    problem = ExecutionProblem(inventory=inventory)
    try:
        t0 = t0_threshold(model, lob, problem)
    except ValueError:
        return None, None
    try:
        k = kappa(t0, model, lob, problem)
    except ValueError:
        k = None
    return t0, k


def sweep_point(spec: SweepSpec, value: float) -> SweepRow:
    cfg = spec.base.with_value(spec.axis, value)
    ensure_valid(cfg.model, cfg.lob, cfg.problem)
    n = cfg.problem.periods
    if n == 1:
        res = solve_single_period(cfg.problem.inventory, cfg.problem.horizon, cfg.model, cfg.lob)
        y, m, v = res.y_star, res.m_star, res.value
    else:
        step = optimize_first_step(n, cfg.model, cfg.lob, cfg.problem)
        y, m, v = step.y, step.m, step.value
    t0 = k = None
    if cfg.model.is_bm and cfg.model.mu > 0:
        t0, k = _threshold(cfg.model, cfg.lob, cfg.problem.inventory)
    return SweepRow(spec.fixture_name, float(value), y, m, v, t0, k)


def run_sweeps(specs: list[SweepSpec], threads: int | None = None) -> list[SweepRow]:
    """Evaluate every (spec, value) pair; rows come back in spec then axis order."""
    jobs = [(s, v) for s in specs for v in s.values]
    workers = min(threads or thread_count(), len(jobs))
    if workers <= 1:
        return [sweep_point(s, v) for s, v in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: sweep_point(*job), jobs))


# ---------------------------------------------------------------------------
# Figure presets
# ---------------------------------------------------------------------------


def _cfg(model: ModelParams, lob: LobParams = BASE_LOB, problem: ExecutionProblem = BASE_PROBLEM) -> RunConfig:
    return RunConfig(model, lob, problem)


MU_GRID = linspace(-1.0, 1.0, 101)
GBM_MU_GRID = linspace(-0.1, 0.2, 31)
T_GRID = linspace(0.005, 0.5, 100)


def _fig1() -> list[SweepSpec]:
    # m*, y* against mu for several book depths
    return [
        SweepSpec(_cfg(bm(0.0), LobParams(k_depth=K, rho=0.2, beta=0.01)), "mu", MU_GRID, f"K={K:g}")
        for K in (10, 50, 70, 150)
    ]


def _fig2() -> list[SweepSpec]:
    # against the horizon with mu = 0.5 for several fill fractions
    return [
        SweepSpec(_cfg(bm(0.5), LobParams(k_depth=10, rho=rho, beta=0.01)), "horizon", T_GRID, f"rho={rho:g}")
        for rho in (0.1, 0.5, 1.0)
    ]


def _fig3() -> list[SweepSpec]:
    return [
        SweepSpec(_cfg(bm(0.0), LobParams(k_depth=10, rho=0.2, beta=b)), "mu", MU_GRID, f"beta={b:g}")
        for b in (0.001, 0.005, 0.01)
    ]


def _fig4() -> list[SweepSpec]:
    return [
        SweepSpec(_cfg(bm(0.0, s), LobParams(k_depth=10, rho=0.5, beta=0.01)), "mu", MU_GRID, f"sigma={s:g}")
        for s in (0.1, 0.15, 0.2)
    ]


def _fig5() -> list[SweepSpec]:
    rhos = (0.2, 0.4, 0.6, 0.8, 1.0)
    specs = []
    for K in (150, 10):
        specs += [
            SweepSpec(_cfg(bm(0.0), LobParams(k_depth=K, rho=r, beta=0.01)), "mu", MU_GRID, f"bm_K={K:g}_rho={r:g}")
            for r in rhos
        ]
    specs += [
        SweepSpec(_cfg(gbm(0.0, 0.01), LobParams(k_depth=10, rho=r, beta=0.01)), "mu", GBM_MU_GRID,
                  f"gbm_K=10_rho={r:g}")
        for r in rhos
    ]
    return specs


PRESETS = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5}


def preset(name: str) -> list[SweepSpec]:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
