"""Path simulation of the order lifecycle, used as an oracle for the closed forms.

Paths are split into fixed-size blocks; block b draws from a Philox stream
keyed by (seed, stream, b). Blocks may run on any number of threads and are
concatenated in block order, so results depend only on the seed.

Barrier crossings between grid points are detected with the Brownian-bridge
maximum law, which removes discretization bias from the hit indicator. The
geometric model is simulated exactly in log space.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .hitting import branch_means
from .market import Decision, ExecutionProblem, LobParams, ModelParams, ensure_valid, impact
from .multi_period import policy_at

DEFAULT_BLOCK = 8192


def thread_count() -> int:
    """Pool size from EXECLAB_THREADS; unset or 0 means one per CPU."""
    raw = os.environ.get("EXECLAB_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("EXECLAB_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    steps_per_period: int = 16
    seed: int = 7
    antithetic: bool = False
    block_size: int = DEFAULT_BLOCK
    stream: int = 0  # separates fixtures sharing one seed

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.steps_per_period < 1:
            raise ValueError("steps_per_period must be >= 1")
        if self.seed < 0 or self.stream < 0:
            raise ValueError("seed and stream must be >= 0")
        if self.block_size < 2 or self.block_size % 2:
            raise ValueError("block_size must be an even integer >= 2")


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    hit_fraction: float

    def z_score(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if target == self.mean else np.inf
        return (self.mean - target) / self.std_error


@dataclass(frozen=True)
class HittingEstimate:
    p_survive: SimEstimate
    e_on_survive: SimEstimate
    e_on_hit: SimEstimate


def crossing_probability(x0, x1, barrier, dt: float, sigma: float):
    """P(max of a Brownian bridge from x0 to x1 over dt reaches barrier)."""
    if not dt > 0 or not sigma > 0:
        raise ValueError("dt and sigma must be > 0")
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    gap0 = barrier - x0
    gap1 = barrier - x1
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.exp(-2.0 * gap0 * gap1 / (sigma * sigma * dt))
    p = np.where((gap0 <= 0) | (gap1 <= 0), 1.0, p)
    return float(p) if p.ndim == 0 else p


# ---------------------------------------------------------------------------
# Block machinery
# ---------------------------------------------------------------------------


def _block_sizes(cfg: SimConfig) -> list[int]:
    full, rest = divmod(cfg.n_paths, cfg.block_size)
    sizes = [cfg.block_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def _rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, block])))


class _Draws:
    """Normal and uniform draws for one block; antithetic pairs share uniforms."""

    def __init__(self, rng: np.random.Generator, size: int, antithetic: bool):
        self.rng, self.size, self.antithetic = rng, size, antithetic

    def normal(self) -> np.ndarray:
        if not self.antithetic:
            return self.rng.standard_normal(self.size)
        half = self.rng.standard_normal((self.size + 1) // 2)
        return np.concatenate([half, -half])[: self.size]

    def uniform(self) -> np.ndarray:
        if not self.antithetic:
            return self.rng.random(self.size)
        half = self.rng.random((self.size + 1) // 2)
        return np.concatenate([half, half])[: self.size]


def _run_blocks(cfg: SimConfig, work) -> list:
    sizes = _block_sizes(cfg)
    jobs = [(b, n) for b, n in enumerate(sizes)]

    def one(job):
        b, n = job
        return work(_Draws(_rng(cfg.seed, cfg.stream, b), n, cfg.antithetic), n)

    workers = min(thread_count(), len(jobs))
    if workers <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))


def _estimate(samples: np.ndarray, hits: np.ndarray, cfg: SimConfig, sizes: list[int]) -> SimEstimate:
    n = len(samples)
    if cfg.antithetic:
        # average within antithetic pairs, block by block
        units, start = [], 0
        for size in sizes:
            block = samples[start:start + size]
            h = (size + 1) // 2
            lo, hi = block[:h], block[h:]
            units.append(np.concatenate([(lo[: len(hi)] + hi) / 2, lo[len(hi):]]))
            start += size
        units = np.concatenate(units)
    else:
        units = samples
    mean = float(np.mean(samples))
    se = float(np.std(units, ddof=1) / np.sqrt(len(units))) if len(units) > 1 else 0.0
    return SimEstimate(mean, se, n, float(np.mean(hits)))


# ---------------------------------------------------------------------------
# One period of price motion with barrier detection
# ---------------------------------------------------------------------------


def _evolve(draws: _Draws, mid: np.ndarray, offset, period: float, model: ModelParams,
            lob: LobParams, steps: int):
    """Move each path's mid over one period; report whether mid + d reached mid0 + offset.

    Returns (hit, terminal_mid). ``offset`` may be per path.
    """
    dt = period / steps
    sd = model.sigma * np.sqrt(dt)
    offset = np.broadcast_to(np.asarray(offset, dtype=float), mid.shape)
    if model.is_bm:
        x = np.zeros_like(mid)
        barrier = offset - lob.d
        drift, vol = model.mu * dt, model.sigma
    else:
        x = np.zeros_like(mid)
        barrier = np.log1p((offset - lob.d) / mid)
        drift, vol = (model.mu - 0.5 * model.sigma ** 2) * dt, model.sigma
    hit = barrier <= 0.0
    for _ in range(steps):
        x_next = x + drift + sd * draws.normal()
        p = crossing_probability(x, x_next, barrier, dt, vol)
        hit |= draws.uniform() < p
        x = x_next
    terminal = mid + x if model.is_bm else mid * np.exp(x)
    return hit, terminal


# ---------------------------------------------------------------------------
# Public simulators
# ---------------------------------------------------------------------------


def simulate_hitting(y: float, t: float, model: ModelParams, lob: LobParams, cfg: SimConfig) -> HittingEstimate:
    """Estimate P(no hit by t) and the price functional split across the two events.

    The functional is S(t) - s0 for the arithmetic model and S(t) for the
    geometric one, matching the analytic moments.
    """
    ensure_valid(model, lob, None, Decision(y, 0.0))

    def work(draws, n):
        mid = np.full(n, model.s0)
        hit, s_t = _evolve(draws, mid, y, t, model, lob, cfg.steps_per_period)
        value = s_t - model.s0 if model.is_bm else s_t
        surv = ~hit
        return np.stack([surv.astype(float), value * surv, value * hit]), hit

    out = _run_blocks(cfg, work)
    sizes = _block_sizes(cfg)
    data = np.concatenate([o[0] for o in out], axis=1)
    hits = np.concatenate([o[1] for o in out])
    est = [_estimate(row, hits, cfg, sizes) for row in data]
    return HittingEstimate(*est)


def _period_cash(mid0, terminal, hit, y, m, remaining, lob: LobParams, last: bool):
    """Cash from one period and the shares still held after it."""
    rest = remaining - m
    filled = np.where(hit, rest * lob.rho, 0.0)
    left = rest - filled
    cash = m * (mid0 - lob.d - impact(lob, m) - lob.fee)
    cash = cash + filled * (mid0 + y + lob.rebate)
    if last:
        cash = cash + left * (terminal - lob.d - impact(lob, left) - lob.fee)
        left = np.zeros_like(left)
    return cash, left


def simulate_single_period(dec: Decision, model: ModelParams, lob: LobParams,
                           problem: ExecutionProblem, cfg: SimConfig) -> SimEstimate:
    """Cash from selling m now, resting M - m at s0 + y and clearing the rest at T.

    On a hit exactly rho (M - m) shares fill at s0 + y and earn the rebate;
    unfilled shares are sold at the terminal mid through the supply curve.
    """
    ensure_valid(model, lob, problem, dec)
    M = problem.inventory

    def work(draws, n):
        mid = np.full(n, model.s0)
        hit, s_t = _evolve(draws, mid, dec.y, problem.horizon, model, lob, cfg.steps_per_period)
        cash, _ = _period_cash(mid, s_t, hit, dec.y, dec.m, M, lob, last=True)
        return cash, hit

    out = _run_blocks(cfg, work)
    return _estimate(np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out]),
                     cfg, _block_sizes(cfg))


@dataclass(frozen=True)
class _Node:
    mid: float  # certainty-equivalent mid used to pick the decision
    remaining: float
    y: float
    m: float


def policy_tree(first_step: Decision, n: int, model: ModelParams, lob: LobParams,
                problem: ExecutionProblem) -> dict[tuple[int, ...], _Node]:
    """Decisions for every hit/survive history, keyed by the tuple of past hits.

    After each period the next state is the branch's conditional mean mid
    and the shares left on that branch; the decision there is the analytic
    optimum from that state.
    """
    period = problem.horizon / n
    tree = {(): _Node(model.s0, problem.inventory, first_step.y, first_step.m)}
    frontier = [()]
    for k in range(n - 1, 0, -1):
        nxt = []
        for hist in frontier:
            node = tree[hist]
            rest = node.remaining - node.m
            _, mid_s, mid_h = branch_means(node.y, period, replace(model, s0=node.mid), lob)
            for hit, mid, left in ((0, mid_s, rest), (1, mid_h, rest * (1 - lob.rho))):
                step = policy_at(k, mid, left, period, model, lob, problem.inventory)
                tree[hist + (hit,)] = _Node(float(mid), float(left), step.y, step.m)
                nxt.append(hist + (hit,))
        frontier = nxt
    return tree


def simulate_multi_period(first_step: Decision, n: int, model: ModelParams, lob: LobParams,
                          problem: ExecutionProblem, cfg: SimConfig) -> SimEstimate:
    """Cash from playing first_step, then the analytic policy on each branch.

    Orders are placed relative to each path's realized mid at the period
    start. hit_fraction refers to the first period.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    ensure_valid(model, lob, problem, first_step)
    if n == 1:
        return simulate_single_period(first_step, model, lob, problem, cfg)
    period = problem.horizon / n
    tree = policy_tree(first_step, n, model, lob, problem)

    def work(draws, size):
        mid = np.full(size, model.s0)
        remaining = np.full(size, problem.inventory)
        code = np.zeros(size, dtype=np.int64)  # history bits, first period is the high bit
        cash = np.zeros(size)
        first_hit = None
        for i in range(n):
            hists = [h for h in tree if len(h) == i]
            ys = np.empty(size)
            ms = np.empty(size)
            for h in hists:
                sel = code == _code(h)
                ys[sel] = tree[h].y
                ms[sel] = tree[h].m
            hit, terminal = _evolve(draws, mid, ys, period, model, lob, cfg.steps_per_period)
            got, remaining = _period_cash(mid, terminal, hit, ys, ms, remaining, lob, last=i == n - 1)
            cash += got
            if first_hit is None:
                first_hit = hit
            code = code * 2 + hit
            mid = terminal
        return cash, first_hit

    out = _run_blocks(cfg, work)
    return _estimate(np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out]),
                     cfg, _block_sizes(cfg))


def _code(hist: tuple[int, ...]) -> int:
    c = 0
    for h in hist:
        c = c * 2 + h
    return c
