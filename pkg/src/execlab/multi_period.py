"""Multi-period placement: backward recursion over n equal periods.

At each period start the trader cancels any resting order, sells m at
market and rests the remainder at mid + y for one period of length T/n.
Continuations are evaluated at the branch-conditional mean mid-price.

For the arithmetic model the optimal value from any state is
``remaining * mid + G(steps_left, remaining)`` with G independent of the
mid-price, so only G is cached. G(1, .) is solved exactly per query; deeper
levels are tabulated on a uniform inventory lattice and interpolated
linearly between nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .hitting import branch_means, hitting
from .market import Decision, ExecutionProblem, LobParams, ModelParams, ensure_valid, impact
from .numerics import golden_max
from .single_period import (
    Y_GRID_POINTS,
    _clean,
    ecf_values,
    solve_single_period,
    spread_order_points,
    y_search_bounds,
)

LATTICE_POINTS = 257
M_XTOL_REL = 1e-6
Y_XTOL_SIGMAS = 1e-8
REFINE_ROUNDS = 2


@dataclass(frozen=True)
class PeriodState:
    mid: float
    remaining: float
    t_left: float
    steps_left: int

    def __post_init__(self):
        if self.remaining < 0:
            raise ValueError("remaining must be >= 0")
        if not self.t_left > 0:
            raise ValueError("t_left must be > 0")
        if int(self.steps_left) != self.steps_left or self.steps_left < 1:
            raise ValueError("steps_left must be an integer >= 1")


@dataclass(frozen=True)
class PolicyStep:
    y: float
    m: float
    value: float


def _with_mid(model: ModelParams, mid: float) -> ModelParams:
    return replace(model, s0=float(mid))


class BmSolver:
    """Arithmetic-BM dynamic program for a fixed period length.

    ``scale`` is the largest inventory the lattice must cover. The cache
    dictionaries are only ever filled with deterministic values, so
    concurrent readers/writers can at worst duplicate work.
    """

    def __init__(self, model: ModelParams, lob: LobParams, period: float, scale: float,
                 lattice_points: int = LATTICE_POINTS):
        if not model.is_bm:
            raise ValueError("BmSolver requires the arithmetic model")
        self.model = _with_mid(model, 0.0)
        self.lob = lob
        self.period = float(period)
        self.scale = float(scale)
        self.lattice = np.linspace(0.0, self.scale, lattice_points)
        self.spacing = self.lattice[1] - self.lattice[0]
        self._g1: dict[float, float] = {}
        self._policy1: dict[float, PolicyStep] = {}
        self._nodes: dict[tuple[int, int], float] = {}
        self._policy: dict[tuple[int, float], PolicyStep] = {}

        lo, hi = y_search_bounds(model, lob, self.period)
        self.y_grid = np.linspace(lo, hi, Y_GRID_POINTS)
        self.y_xtol = Y_XTOL_SIGMAS * model.sigma * np.sqrt(self.period)
        self._grid_moments = self._moments(self.y_grid)

    # -- primitives -------------------------------------------------------

    def _moments(self, y):
        # mid-price 0: e_on_* are increments
        hm = hitting(y, self.period, self.model, self.lob)
        p_s = np.asarray(hm.p_survive, dtype=float)
        return 1.0 - p_s, np.asarray(hm.e_on_hit), p_s, np.asarray(hm.e_on_survive)

    def _single(self, remaining: float) -> PolicyStep:
        key = float(remaining)
        hit = self._policy1.get(key)
        if hit is None:
            if remaining <= 0:
                hit = PolicyStep(self.lob.d, 0.0, 0.0)
            else:
                res = solve_single_period(remaining, self.period, self.model, self.lob)
                hit = PolicyStep(res.y_star, res.m_star, res.value)
            self._policy1[key] = hit
        return hit

    def excess(self, k: int, remaining) -> np.ndarray:
        """G(k, R): optimal value from R shares with k periods left, minus R * mid."""
        r = np.atleast_1d(np.asarray(remaining, dtype=float))
        if k == 1:
            return np.array([self._single(v).value for v in r])
        return np.interp(r, self.lattice, self._node_values(k, r))

    def _node_values(self, k: int, r: np.ndarray) -> np.ndarray:
        idx = np.unique(np.clip(np.searchsorted(self.lattice, r), 0, len(self.lattice) - 1))
        idx = np.unique(np.concatenate([idx, np.maximum(idx - 1, 0)]))
        table = np.full(len(self.lattice), np.nan)
        for i in idx:
            table[i] = self._node(k, int(i))
        # np.interp only reads the two bracketing nodes, which are filled above
        return np.where(np.isnan(table), 0.0, table)

    def _node(self, k: int, i: int) -> float:
        key = (k, i)
        v = self._nodes.get(key)
        if v is None:
            v = self._first_step(k, float(self.lattice[i]), aligned=True).value
            self._nodes[key] = v
        return v

    # -- first-step objective ---------------------------------------------

    def step_excess(self, k: int, remaining: float, y, m, moments=None, conts=None):
        """Excess MECF of playing (y, m) now with k >= 2 periods left.

        Broadcasts y (rows) against m (columns).
        """
        lob = self.lob
        y = np.asarray(y, dtype=float)
        m = np.asarray(m, dtype=float)
        p_h, e_h, p_s, e_s = self._moments(y) if moments is None else moments
        rest = remaining - m
        if conts is None:
            g_hit = self.excess(k - 1, rest * (1.0 - lob.rho)).reshape(m.shape)
            g_surv = self.excess(k - 1, rest).reshape(m.shape)
        else:
            g_hit, g_surv = conts
        return (
            m * (-lob.d - impact(lob, m) - lob.fee)
            + rest * lob.rho * (y + lob.rebate) * p_h
            + rest * (1.0 - lob.rho) * e_h
            + rest * e_s
            + g_hit * p_h
            + g_surv * p_s
        )

    def _m_grid(self, remaining: float, aligned: bool) -> np.ndarray:
        if aligned:
            nodes = self.lattice[self.lattice <= remaining + 1e-12 * self.scale]
            base = remaining - nodes
        else:
            base = np.linspace(0.0, remaining, LATTICE_POINTS)
        lob = self.lob
        extra = {"K": lob.k_depth, "R-K": remaining - lob.k_depth}
        if lob.rho < 1:
            extra["R-K/(1-rho)"] = remaining - lob.k_depth / (1 - lob.rho)
        if self.model.mu < 0:
            extra.update(spread_order_points(remaining, self.period, self.model, lob))
        pts = [v for _, v in _clean(extra, remaining)]
        grid = np.unique(np.clip(np.concatenate([base, pts]), 0.0, remaining))
        return grid

    def _first_step(self, k: int, remaining: float, aligned: bool = False) -> PolicyStep:
        if remaining <= 0:
            return PolicyStep(self.lob.d, 0.0, 0.0)
        if k == 1:
            return self._single(remaining)
        ms = self._m_grid(remaining, aligned)
        rest = remaining - ms
        conts = (self.excess(k - 1, rest * (1.0 - self.lob.rho)), self.excess(k - 1, rest))
        mom = tuple(a[:, None] for a in self._grid_moments)
        table = self.step_excess(k, remaining, self.y_grid[:, None], ms[None, :], mom, conts)
        i, j = np.unravel_index(int(np.argmax(table)), table.shape)
        y, m, best = float(self.y_grid[i]), float(ms[j]), float(table[i, j])

        def f(yv, mv, fixed=None):
            return float(np.ravel(self.step_excess(k, remaining, yv, mv, conts=fixed))[0])

        m_tol = M_XTOL_REL * max(remaining, 1.0)
        for _ in range(REFINE_ROUNDS):
            # continuation values depend on m only, so the y search reuses them
            fixed = (conts[0][j:j + 1], conts[1][j:j + 1]) if aligned else None
            i = int(np.clip(np.searchsorted(self.y_grid, y), 0, len(self.y_grid) - 1))
            y_lo = self.y_grid[max(i - 1, 0)]
            y_hi = self.y_grid[min(i + 1, len(self.y_grid) - 1)]
            yn, vn = golden_max(lambda v: f(v, m, fixed), y_lo, y_hi, self.y_xtol)
            if vn > best:
                y, best = yn, vn
            if aligned:
                # lattice nodes only feed interpolation; the m grid spacing is enough there
                break
            j = int(np.clip(np.searchsorted(ms, m), 0, len(ms) - 1))
            m_lo, m_hi = ms[max(j - 1, 0)], ms[min(j + 1, len(ms) - 1)]
            mn, vn = golden_max(lambda v: f(y, v), m_lo, m_hi, m_tol)
            if vn > best:
                m, best = mn, vn
        return PolicyStep(y, m, best)

    def policy(self, k: int, remaining: float) -> PolicyStep:
        """Optimal (y, m) and excess value with k periods left, solved at `remaining` itself."""
        key = (k, float(remaining))
        hit = self._policy.get(key)
        if hit is None:
            hit = self._first_step(k, float(remaining))
            self._policy[key] = hit
        return hit


_SOLVERS: dict[tuple, BmSolver] = {}


def bm_solver(model: ModelParams, lob: LobParams, period: float, scale: float) -> BmSolver:
    """Shared solver per parameter set; the mid-price does not enter the key."""
    key = (model.mu, model.sigma, lob, float(period), float(scale))
    solver = _SOLVERS.get(key)
    if solver is None:
        solver = BmSolver(model, lob, period, scale)
        _SOLVERS[key] = solver
    return solver


def clear_cache() -> None:
    _SOLVERS.clear()


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _check(n: int, state: PeriodState, dec: Decision, model, lob) -> None:
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    if dec.m > state.remaining:
        raise ValueError("market order exceeds remaining inventory")
    ensure_valid(_with_mid(model, state.mid), lob, None, dec)


def mecf(n: int, state: PeriodState, dec: Decision, model: ModelParams, lob: LobParams) -> float:
    """Expected cash flow of playing `dec` now and optimally afterwards.

    The first period lasts state.t_left / n; for n = 1 this is the
    single-period expected cash flow over the whole remaining time.
    """
    _check(n, state, dec, model, lob)
    period = state.t_left / n
    if n == 1:
        return float(ecf_values(dec.y, dec.m, state.remaining, period, _with_mid(model, state.mid), lob))
    if not model.is_bm:
        return mecf_direct(n, state, dec, model, lob)
    solver = bm_solver(model, lob, period, state.remaining)
    g = float(solver.step_excess(n, state.remaining, dec.y, dec.m))
    return state.remaining * state.mid + g


def _optimal_value_direct(k: int, mid: float, remaining: float, period: float,
                          model: ModelParams, lob: LobParams) -> float:
    if remaining <= 0:
        return 0.0
    if k == 1:
        return solve_single_period(remaining, period, _with_mid(model, mid), lob).value
    return _first_step_direct(k, mid, remaining, period, model, lob).value


def _step_direct(k, mid, remaining, period, y, m, model, lob) -> float:
    lob_ = lob
    m_local = _with_mid(model, mid)
    p_s, mid_s, mid_h = branch_means(y, period, m_local, lob_)
    p_h = 1.0 - p_s
    rest = remaining - m
    value = m * (mid - lob_.d - float(impact(lob_, m)) - lob_.fee)
    value += rest * lob_.rho * (mid + y + lob_.rebate) * p_h
    if p_h > 0:
        value += p_h * _optimal_value_direct(k - 1, mid_h, rest * (1 - lob_.rho), period, model, lob_)
    if p_s > 0:
        value += p_s * _optimal_value_direct(k - 1, mid_s, rest, period, model, lob_)
    return float(value)


def mecf_direct(n: int, state: PeriodState, dec: Decision, model: ModelParams, lob: LobParams) -> float:
    """Uncached recursion on actual branch mid-prices (works for both models)."""
    _check(n, state, dec, model, lob)
    period = state.t_left / n
    if n == 1:
        return float(ecf_values(dec.y, dec.m, state.remaining, period, _with_mid(model, state.mid), lob))
    return _step_direct(n, state.mid, state.remaining, period, dec.y, dec.m, model, lob)


def _first_step_direct(k, mid, remaining, period, model, lob, y_points=24, m_points=25) -> PolicyStep:
    """Coarse-grid-plus-golden first step without the translation shortcut."""
    lo, hi = y_search_bounds(_with_mid(model, mid), lob, period)
    ys = np.linspace(lo, hi, y_points)
    ms = np.linspace(0.0, remaining, m_points)
    best = (-np.inf, lo, 0.0)
    for y in ys:
        for m in ms:
            v = _step_direct(k, mid, remaining, period, y, m, model, lob)
            if v > best[0]:
                best = (v, y, m)
    value, y, m = best
    y_tol = Y_XTOL_SIGMAS * model.sigma * np.sqrt(period) * (mid if not model.is_bm else 1.0)
    dy, dm = (hi - lo) / (y_points - 1), remaining / (m_points - 1)
    for _ in range(REFINE_ROUNDS):
        yn, vn = golden_max(lambda v: _step_direct(k, mid, remaining, period, v, m, model, lob),
                            max(lo, y - dy), min(hi, y + dy), y_tol)
        if vn > value:
            y, value = yn, vn
        mn, vn = golden_max(lambda v: _step_direct(k, mid, remaining, period, y, v, model, lob),
                            max(0.0, m - dm), min(remaining, m + dm), M_XTOL_REL * max(remaining, 1.0))
        if vn > value:
            m, value = mn, vn
    return PolicyStep(float(y), float(m), float(value))


def optimize_first_step(n: int, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> PolicyStep:
    """Optimal first-period (y, m) with n periods over the horizon.

    The geometric model has no translation structure and is solved by the
    direct recursion on coarse grids; it is practical for n <= 2.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    ensure_valid(model, lob, problem)
    M = problem.inventory
    period = problem.horizon / n
    if n == 1:
        res = solve_single_period(M, period, model, lob)
        return PolicyStep(res.y_star, res.m_star, res.value)
    if not model.is_bm:
        return _first_step_direct(n, model.s0, M, period, model, lob)
    step = bm_solver(model, lob, period, M).policy(n, M)
    return PolicyStep(step.y, step.m, M * model.s0 + step.value)


def optimal_value(n: int, state: PeriodState, model: ModelParams, lob: LobParams) -> float:
    """Optimal expected cash flow from `state` with n periods left."""
    period = state.t_left / n
    if model.is_bm and state.remaining > 0:
        solver = bm_solver(model, lob, period, state.remaining)
        return state.remaining * state.mid + solver.policy(n, state.remaining).value
    return _optimal_value_direct(n, state.mid, state.remaining, period, model, lob)


def policy_at(k: int, mid: float, remaining: float, period: float, model: ModelParams,
              lob: LobParams, scale: float) -> PolicyStep:
    """Decision the optimal policy takes from (mid, remaining) with k periods left."""
    if remaining <= 0:
        return PolicyStep(lob.d, 0.0, 0.0)
    if model.is_bm:
        step = bm_solver(model, lob, period, scale).policy(k, remaining)
        return PolicyStep(step.y, step.m, remaining * mid + step.value)
    if k == 1:
        res = solve_single_period(remaining, period, _with_mid(model, mid), lob)
        return PolicyStep(res.y_star, res.m_star, res.value)
    return _first_step_direct(k, mid, remaining, period, model, lob)


# ---------------------------------------------------------------------------
# Two-period closed-form candidates
# ---------------------------------------------------------------------------


def _printed_two_period_points(model, lob, problem) -> dict:
    M, T = problem.inventory, problem.horizon
    K, rho, beta = lob.k_depth, lob.rho, lob.beta
    m1 = solve_single_period(M, T / 2, model, lob).m_star
    M2 = M - m1
    eps3 = rho * (3 * lob.d + 2 * lob.rebate + lob.fee) + (1 - rho) * model.mu * T
    named = {"0": 0.0, "M'": M2, "M": M}
    if rho < 1:
        q = 1 - rho
        named["K"] = K
        named["M'-K/(1-rho)"] = M2 - K / q
        if beta > 0:
            named["m1^2"] = K / 2 - eps3 / (2 * beta)
            named["m2^2"] = M2 - K / (2 * q) - eps3 / (2 * q * q * beta)
            named["m3^2"] = (2 * M2 * beta * q * q + beta * rho * K - eps3) / (2 * beta * (1 + q * q))
    return named


def _inner_regimes(K, q, beta, eps3):
    """Second-period market order as an affine map of its inventory R, with penalty flags.

    Each entry is (label, m1(R), m1 above K, leftover above K).
    """
    regimes = [
        ("0", lambda R: 0.0 * R, 0, 0), ("0", lambda R: 0.0 * R, 0, 1),
        ("R", lambda R: R, 0, 0), ("R", lambda R: R, 1, 0),
        ("K", lambda R: K + 0.0 * R, 0, 0), ("K", lambda R: K + 0.0 * R, 0, 1),
        ("R-K/q", lambda R: R - K / q, 0, 0), ("R-K/q", lambda R: R - K / q, 1, 0),
    ]
    if beta > 0:
        regimes += [
            ("a", lambda R: K / 2 - eps3 / (2 * beta) + 0.0 * R, 1, 0),
            ("b", lambda R: R - K / (2 * q) - eps3 / (2 * q * q * beta), 0, 1),
            ("c", lambda R: (2 * beta * q * q * R + beta * (1 - q) * K - eps3) / (2 * beta * (1 + q * q)), 1, 1),
        ]
    return regimes


def _exact_two_period_points(model, lob, problem) -> dict:
    """Stationary points of every quadratic piece of the n = 2 objective at y = d.

    With y = d the order is reached at once, so the objective in m0 is the
    immediate sale, the filled fraction, and the optimal last-period value
    of the unfilled (1 - rho)(M - m0) shares. Fixing which impact terms are
    active and which formula gives the inner optimum makes it an exact
    quadratic; its vertex is found from three evaluations.
    """
    M, K, beta = problem.inventory, lob.k_depth, lob.beta
    rho, q = lob.rho, 1.0 - lob.rho
    dt = problem.horizon / 2
    d, f, r, mu = lob.d, lob.fee, lob.rebate, model.mu
    eps3 = rho * (2 * d + r + f) + q * mu * dt
    c1 = rho * (d + r) + q * (mu * dt - d - f)
    points: dict[str, float] = {}
    if q == 0:
        return points
    for outer in (0, 1):
        for label, m1_of, a_on, b_on in _inner_regimes(K, q, beta, eps3):
            def piece(m0):
                R = q * (M - m0)
                m1 = m1_of(R)
                left = q * (R - m1)
                return (
                    -m0 * (d + f) - outer * beta * m0 * (m0 - K)
                    + (M - m0) * (rho * (d + r) + q * mu * dt)
                    + R * c1 - m1 * eps3 - a_on * beta * m1 * (m1 - K) - b_on * beta * left * (left - K)
                )
            x = np.array([0.0, 0.5 * M, M])
            coef = np.polyfit(x, [piece(v) for v in x], 2)
            if coef[0] < -1e-12 * max(1.0, abs(coef[1])):
                points[f"vertex[{outer},{label},{a_on}{b_on}]"] = -coef[1] / (2 * coef[0])
    return points


def two_period_candidates(model: ModelParams, lob: LobParams, problem: ExecutionProblem,
                          exact: bool = True) -> list[tuple[str, float]]:
    """Candidate first-period market orders for two periods under negative drift.

    The base set reuses the one-period interior formulas with inventory
    M' = M - m1 (m1 the one-period optimum at y = d over half the horizon)
    and cost eps3' = rho (3d + 2r + f) + (1 - rho) mu T. That set treats the
    second-period order as fixed, so with exact=True the vertices of the
    objective's quadratic pieces are appended; the objective is concave,
    so the union always contains the maximizer.
    """
    if not model.is_bm:
        raise ValueError("two_period_candidates requires the arithmetic model")
    if not model.mu < 0:
        raise ValueError("two_period_candidates requires mu < 0")
    if problem.periods != 2:
        raise ValueError("two_period_candidates requires periods == 2")
    ensure_valid(model, lob, problem)
    named = _printed_two_period_points(model, lob, problem)
    if exact:
        named.update(_exact_two_period_points(model, lob, problem))
    return _clean(named, problem.inventory)


def best_two_period_candidate(model: ModelParams, lob: LobParams, problem: ExecutionProblem,
                              exact: bool = True):
    """(label, m, value) of the best two-period candidate with y = d."""
    cands = two_period_candidates(model, lob, problem, exact)
    state = PeriodState(model.s0, problem.inventory, problem.horizon, 2)
    scored = [(label, m, mecf(2, state, Decision(lob.d, m), model, lob)) for label, m in cands]
    return max(scored, key=lambda c: c[2])
