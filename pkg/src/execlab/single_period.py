"""Single-period expected cash flow and its optimization over (y, m).

A trader holding M shares sells m immediately, rests M - m at s0 + y and
converts whatever is left at the horizon into a market order. When the
limit level becomes the best ask a fraction rho of the resting shares
fills. Everything here is priced off the first-passage moments in
:mod:`execlab.hitting`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .hitting import bm_terms, hitting, normal_pdf
from .market import (
    Decision,
    ExecutionProblem,
    LobParams,
    ModelParams,
    ensure_valid,
    impact,
    negative_part,
)
from .numerics import bisect_root, grid_then_golden

Y_GRID_POINTS = 512
Y_SPAN_SIGMAS = 10.0
Y_XTOL_SIGMAS = 1e-8


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    CANDIDATE_ENUM = "CandidateEnum"
    GRID_REFINE = "GridRefine"


@dataclass(frozen=True)
class EcfBreakdown:
    total: float
    mo_now: float
    lo_filled: float
    terminal_mo: float


@dataclass(frozen=True)
class Epsilons:
    eps0: float
    eps3: float
    eps4: float
    eps5: float
    gamma: float


@dataclass(frozen=True)
class OptResult:
    y_star: float
    m_star: float
    value: float
    candidates: list = field(default_factory=list)  # (label, m, ecf)
    method: Method = Method.CANDIDATE_ENUM


# ---------------------------------------------------------------------------
# Expected cash flow
# ---------------------------------------------------------------------------


def _price_moments(y, t, model: ModelParams, lob: LobParams):
    """(P(survive), E[S_t; survive], E[S_t; hit]) in price units."""
    hm = hitting(y, t, model, lob)
    p_s = np.asarray(hm.p_survive, dtype=float)
    if model.is_bm:
        return p_s, model.s0 * p_s + hm.e_on_survive, model.s0 * (1.0 - p_s) + hm.e_on_hit
    return p_s, np.asarray(hm.e_on_survive), np.asarray(hm.e_on_hit)


def assembled_parts(y, m, inventory, t, model: ModelParams, lob: LobParams, l_exec=None):
    """Cash-flow legs built term by term from the hitting moments.

    Broadcasts over y and m. Returns (mo_now, lo_filled, terminal_mo).
    ``l_exec`` is the expected number of limit shares filled on the hit
    branch; it defaults to rho * (inventory - m).
    """
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    rest = inventory - m
    fill = rho_fill(rest, lob) if l_exec is None else np.asarray(l_exec, dtype=float)
    left = rest - fill
    s0, d, f = model.s0, lob.d, lob.fee
    p_s, e_s, e_h = _price_moments(y, t, model, lob)
    p_h = 1.0 - p_s

    mo_now = m * (s0 - d - impact(lob, m) - f)
    lo_filled = fill * (s0 + y + lob.rebate) * p_h
    survive_leg = rest * (e_s - p_s * (d + impact(lob, rest) + f))
    hit_leg = left * e_h - left * (d + impact(lob, left) + f) * p_h
    return mo_now, lo_filled, survive_leg + hit_leg


def rho_fill(rest, lob: LobParams):
    return np.asarray(rest, dtype=float) * lob.rho


def bm_closed_form(y, m, inventory, t, model: ModelParams, lob: LobParams):
    """Constant-rho arithmetic-BM expected cash flow in reduced form.

    Broadcasts over y and m. This is the three-line expression
    M eps5 - m eps4 - beta [ ... ] and is checked against the assembled form.
    """
    return model.s0 * inventory + bm_closed_form_excess(y, m, inventory, t, model, lob)


def bm_closed_form_excess(y, m, inventory, t, model: ModelParams, lob: LobParams):
    """Reduced-form expected cash flow minus inventory * s0."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    k = bm_terms(y, t, model, lob)
    rho, d, f, r = lob.rho, lob.d, lob.fee, lob.rebate
    mut = model.mu * t
    carry = 1.0 - rho + rho * k.eps0
    level = (
        -2.0 * rho * k.x * k.n_tilde
        - (d + f - mut) * carry
        + (1.0 - k.eps0) * rho * (y + r)
    )
    eps4 = rho * (1.0 - k.eps0) * (d + f + y + r) - 2.0 * rho * k.x * k.n_tilde + mut * carry
    rest = inventory - m
    K = lob.k_depth
    liquidity = m * negative_part(K - m) + rest * (
        k.eps0 * negative_part(K - rest)
        + (1.0 - k.eps0) * (1.0 - rho) * negative_part(K - rest * (1.0 - rho))
    )
    return inventory * level - m * eps4 - lob.beta * liquidity


def _check_decision(dec: Decision, model, lob, problem) -> None:
    ensure_valid(model, lob, problem, dec)


def ecf_bm_general(
    dec: Decision,
    model: ModelParams,
    lob: LobParams,
    problem: ExecutionProblem,
    l_exec: float,
) -> EcfBreakdown:
    """Arithmetic-BM expected cash flow for an arbitrary expected fill."""
    if not model.is_bm:
        raise ValueError("ecf_bm_general requires the arithmetic model")
    _check_decision(dec, model, lob, problem)
    rest = problem.inventory - dec.m
    if not 0.0 <= l_exec <= rest + 1e-12 * max(1.0, rest):
        raise ValueError(f"l_exec must lie in [0, {rest}], got {l_exec}")
    parts = assembled_parts(dec.y, dec.m, problem.inventory, problem.horizon, model, lob, l_exec)
    mo, lo, term = (float(p) for p in parts)
    return EcfBreakdown(mo + lo + term, mo, lo, term)


def ecf_bm_constant_rho(
    dec: Decision, model: ModelParams, lob: LobParams, problem: ExecutionProblem
) -> EcfBreakdown:
    if not model.is_bm:
        raise ValueError("ecf_bm_constant_rho requires the arithmetic model")
    _check_decision(dec, model, lob, problem)
    M, T = problem.inventory, problem.horizon
    total = float(bm_closed_form(dec.y, dec.m, M, T, model, lob))
    mo, lo, term = (float(p) for p in assembled_parts(dec.y, dec.m, M, T, model, lob))
    return EcfBreakdown(total, mo, lo, term)


def ecf_gbm(
    dec: Decision,
    model: ModelParams,
    lob: LobParams,
    problem: ExecutionProblem,
    l_exec: float | None = None,
) -> EcfBreakdown:
    if model.is_bm:
        raise ValueError("ecf_gbm requires the geometric model")
    _check_decision(dec, model, lob, problem)
    parts = assembled_parts(dec.y, dec.m, problem.inventory, problem.horizon, model, lob, l_exec)
    mo, lo, term = (float(p) for p in parts)
    return EcfBreakdown(mo + lo + term, mo, lo, term)


def ecf(dec: Decision, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> EcfBreakdown:
    """Constant-rho expected cash flow for either price model."""
    if model.is_bm:
        return ecf_bm_constant_rho(dec, model, lob, problem)
    return ecf_gbm(dec, model, lob, problem)


def ecf_values(y, m, inventory, t, model: ModelParams, lob: LobParams):
    """Vectorized constant-rho expected cash flow (no validation)."""
    if model.is_bm:
        return bm_closed_form(y, m, inventory, t, model, lob)
    mo, lo, term = assembled_parts(y, m, inventory, t, model, lob)
    return mo + lo + term


# ---------------------------------------------------------------------------
# Shorthand constants and the y-derivative
# ---------------------------------------------------------------------------


def gamma_term(m, inventory, lob: LobParams):
    """min(K - M + m, 0) - (1 - rho) min(K - (M - m)(1 - rho), 0); never positive."""
    K, rho = lob.k_depth, lob.rho
    rest = inventory - np.asarray(m, dtype=float)
    return np.minimum(K - rest, 0.0) - (1.0 - rho) * np.minimum(K - rest * (1.0 - rho), 0.0)


def epsilons(dec: Decision, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> Epsilons:
    if not model.is_bm:
        raise ValueError("epsilons are defined for the arithmetic model")
    T = problem.horizon
    k = bm_terms(dec.y, T, model, lob)
    rho, d, f, r = lob.rho, lob.d, lob.fee, lob.rebate
    eps0 = float(k.eps0)
    mut = model.mu * T
    carry = 1.0 - rho + rho * eps0
    nt = float(k.n_tilde)
    eps3 = rho * (2 * d + r + f) + mut * (1.0 - rho)
    eps4 = rho * (1.0 - eps0) * (d + f + dec.y + r) - 2.0 * rho * float(k.x) * nt + mut * carry
    eps5 = model.s0 - 2.0 * rho * float(k.x) * nt - (d + f - mut) * carry + (1.0 - eps0) * rho * (dec.y + r)
    gamma = float(gamma_term(dec.m, problem.inventory, lob))
    return Epsilons(eps0, eps3, eps4, eps5, gamma)


def decf_dy(dec: Decision, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> float:
    """Analytic d ECF / dy for the arithmetic model with constant rho."""
    if not model.is_bm:
        raise ValueError("decf_dy requires the arithmetic model")
    _check_decision(dec, model, lob, problem)
    return float(_decf_dy(dec.y, dec.m, problem.inventory, problem.horizon, model, lob))


def _decf_dy(y, m, inventory, t, model: ModelParams, lob: LobParams, gamma=None):
    if gamma is None:
        gamma = gamma_term(m, inventory, lob)
    return (inventory - np.asarray(m, dtype=float)) * _decf_dy_per_share(y, t, model, lob, gamma)


def _decf_dy_per_share(y, t, model: ModelParams, lob: LobParams, gamma):
    k = bm_terms(y, t, model, lob)
    mu, sigma = model.mu, model.sigma
    rho, beta = lob.rho, lob.beta
    cost = 2 * lob.d + lob.fee + lob.rebate
    s = sigma * np.sqrt(t)
    # exp(2 x mu/sigma^2) phi(alpha) == phi(beta)
    weight = 2.0 * (normal_pdf(k.beta) - k.alpha * k.n_tilde) / s
    return (
        rho * (ndtr(-k.beta) - k.n_tilde)
        + weight * (-rho * (cost - mu * t) + beta * gamma)
        + k.n_tilde * 2.0 * k.x / (sigma * sigma * t) * (-rho * cost + beta * gamma)
    )


# ---------------------------------------------------------------------------
# Candidate sets in m
# ---------------------------------------------------------------------------


def linear_coefficients(y, t, model: ModelParams, lob: LobParams):
    """(eps0, eps4) so that ECF(y, m) = const - m eps4 - beta * liquidity(m).

    eps0 is the survival probability. eps4 is read off the impact-free cash
    flow, which is linear in m; for the arithmetic model it reproduces the
    closed-form eps4 exactly and for the geometric model it plays the same role.
    """
    y = np.asarray(y, dtype=float)
    free = LobParams(lob.d, lob.k_depth, 0.0, lob.fee, lob.rebate, lob.rho)
    p_s = np.asarray(hitting(y, t, model, lob).p_survive, dtype=float)
    one = np.ones_like(y)
    at0 = ecf_values(y, 0.0 * one, 1.0, t, model, free)
    at1 = ecf_values(y, one, 1.0, t, model, free)
    return p_s, at0 - at1


def _interior_points(eps0, eps4, inventory, lob: LobParams) -> dict:
    """Stationary points of every quadratic piece of ECF(y, .), unclamped.

    Includes the formulas as stated and their variants derived case by case;
    where they coincide the duplicates are removed later.
    """
    M, K, rho, beta = inventory, lob.k_depth, lob.rho, lob.beta
    if beta <= 0:
        return {}
    eps0 = np.asarray(eps0, dtype=float)
    eps4 = np.asarray(eps4, dtype=float)
    q = 1.0 - rho
    out = {
        "K/2-e4/2b": K / 2.0 - eps4 / (2.0 * beta),
        "m4": eps0 / (1 + eps0) * M + (1 - eps0) / (2 * (1 + eps0)) * K - eps4 / (2 * (1 + eps0) * beta),
        "m6": (beta * (2 * M * (eps0 + q * q * (1 - eps0)) + K * (1 - eps0) * rho) - eps4)
        / (2 * beta * (1 + eps0 + q * q * (1 - eps0))),
    }
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = eps0 + (1 - eps0) * q * q
        m5 = M - (beta * (eps0 + (1 - eps0) * q) * K + eps4) / (2 * beta * denom)
        out["m5"] = np.where(denom > 0, m5, np.nan)
        m4p = M - K / 2.0 - eps4 / (2 * beta * eps0)
        out["M-K/2-e4/2be0"] = np.where(eps0 > 0, m4p, np.nan)
    return out


def _kinks(inventory, lob: LobParams) -> dict:
    M, K, rho = inventory, lob.k_depth, lob.rho
    out = {"0": 0.0, "M": M, "K": K, "|K-M|": abs(K - M), "M-K": M - K}
    if rho < 1:
        out["M-K/(1-rho)"] = M - K / (1 - rho)
    return out


def _clean(named: dict, inventory: float, tol: float = 1e-12) -> list[tuple[str, float]]:
    """Clamp to [0, M], drop non-finite values and near-duplicates (first label wins)."""
    kept: list[tuple[str, float]] = []
    for label, value in named.items():
        v = float(value)
        if not np.isfinite(v):
            continue
        v = min(max(v, 0.0), inventory)
        if any(abs(v - w) <= tol * max(1.0, inventory) for _, w in kept):
            continue
        kept.append((label, v))
    return kept


def spread_order_points(inventory, horizon, model: ModelParams, lob: LobParams) -> dict:
    """Named m-candidates for a negative drift with the limit order at y = d."""
    M, K, rho, beta = inventory, lob.k_depth, lob.rho, lob.beta
    eps3 = rho * (2 * lob.d + lob.rebate + lob.fee) + model.mu * horizon * (1 - rho)
    named = {"0": 0.0, "M": M}
    if rho < 1 and K < M:
        q = 1 - rho
        named["K"] = K
        named["M-K/(1-rho)"] = M - K / q
        if beta > 0:
            named["m1"] = K / 2 - eps3 / (2 * beta)
            named["m2"] = M - K / (2 * q) - eps3 / (2 * q * q * beta)
            named["m3"] = (2 * M * beta * q * q + beta * rho * K - eps3) / (2 * beta * (1 + q * q))
    return named


def candidate_set_mu_neg(model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> list[tuple[str, float]]:
    if not model.mu < 0:
        raise ValueError("candidate_set_mu_neg requires mu < 0")
    M = problem.inventory
    named = spread_order_points(M, problem.horizon, model, lob)
    for label, v in _kinks(M, lob).items():
        named.setdefault(label, v)
    return _clean(named, M)


def m_candidates(y: float, inventory: float, t: float, model: ModelParams, lob: LobParams) -> list[tuple[str, float]]:
    """Boundary points, kinks and every piecewise stationary point at fixed y."""
    eps0, eps4 = linear_coefficients(np.array([y]), t, model, lob)
    named = dict(_kinks(inventory, lob))
    for label, v in _interior_points(eps0[0], eps4[0], inventory, lob).items():
        named[label] = v
    return _clean(named, inventory)


def candidate_set_mu_pos(y: float, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> list[tuple[str, float]]:
    if not model.mu > 0:
        raise ValueError("candidate_set_mu_pos requires mu > 0")
    if y < lob.d:
        raise ValueError("y must be >= d")
    return m_candidates(y, problem.inventory, problem.horizon, model, lob)


def candidate_matrix(y, inventory, t, model: ModelParams, lob: LobParams) -> np.ndarray:
    """Candidate m values for each y in a vector, shape (len(y), n_candidates).

    Infeasible formulas are replaced by 0 so the matrix stays rectangular.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eps0, eps4 = linear_coefficients(y, t, model, lob)
    cols = [np.full_like(y, v) for v in _kinks(inventory, lob).values()]
    for v in _interior_points(eps0, eps4, inventory, lob).values():
        cols.append(np.broadcast_to(v, y.shape))
    mat = np.stack(cols, axis=1)
    mat = np.where(np.isfinite(mat), mat, 0.0)
    return np.clip(mat, 0.0, inventory)


def best_m_values(y, inventory, t, model: ModelParams, lob: LobParams):
    """(max over m of ECF(y, m), argmax m) for each y in a vector."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mat = candidate_matrix(y, inventory, t, model, lob)
    vals = ecf_values(y[:, None], mat, inventory, t, model, lob)
    j = np.argmax(vals, axis=1)
    rows = np.arange(len(y))
    return vals[rows, j], mat[rows, j]


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


def y_search_bounds(model: ModelParams, lob: LobParams, t: float) -> tuple[float, float]:
    """Offsets searched for the limit order.

    The span covers ten standard deviations of the horizon move plus any
    positive expected drift; beyond that the order essentially never fills.
    """
    scale = model.s0 if not model.is_bm else 1.0
    s = model.sigma * np.sqrt(t) * scale
    drift = max(model.mu, 0.0) * t * scale
    return lob.d, lob.d + drift + Y_SPAN_SIGMAS * s


def _y_xtol(model: ModelParams, t: float) -> float:
    scale = model.s0 if not model.is_bm else 1.0
    return Y_XTOL_SIGMAS * model.sigma * np.sqrt(t) * scale


def optimize_m(y: float, inventory: float, t: float, model: ModelParams, lob: LobParams) -> OptResult:
    """Best market-order size at a fixed limit offset, by candidate enumeration."""
    cands = m_candidates(y, inventory, t, model, lob)
    ms = np.array([v for _, v in cands])
    vals = ecf_values(y, ms, inventory, t, model, lob)
    j = int(np.argmax(vals))
    table = [(label, v, float(e)) for (label, v), e in zip(cands, vals)]
    return OptResult(float(y), float(ms[j]), float(vals[j]), table, Method.CANDIDATE_ENUM)


def solve_single_period(inventory: float, t: float, model: ModelParams, lob: LobParams) -> OptResult:
    """Joint (y, m) optimum for one period of length t holding `inventory` shares."""
    if inventory <= 0:
        return OptResult(lob.d, 0.0, 0.0, [], Method.CLOSED_FORM)
    if model.is_bm and model.mu < 0:
        named = spread_order_points(inventory, t, model, lob)
        for label, v in _kinks(inventory, lob).items():
            named.setdefault(label, v)
        cands = _clean(named, inventory)
        ms = np.array([v for _, v in cands])
        vals = ecf_values(lob.d, ms, inventory, t, model, lob)
        j = int(np.argmax(vals))
        table = [(label, v, float(e)) for (label, v), e in zip(cands, vals)]
        return OptResult(lob.d, float(ms[j]), float(vals[j]), table, Method.CLOSED_FORM)

    lo, hi = y_search_bounds(model, lob, t)

    def v_of_y(ys):
        return best_m_values(ys, inventory, t, model, lob)[0]

    y_star, _ = grid_then_golden(v_of_y, lo, hi, Y_GRID_POINTS, _y_xtol(model, t))
    res = optimize_m(y_star, inventory, t, model, lob)
    return OptResult(res.y_star, res.m_star, res.value, res.candidates, Method.GRID_REFINE)


def optimize_single_period(model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> OptResult:
    """Optimal immediate market-order size and limit offset for one period.

    With a negative arithmetic drift the limit order sits at the spread and
    only the finite candidate set in m is searched. Otherwise the offset is
    found by a coarse grid plus golden-section refinement, with exact
    candidate enumeration in m at each trial offset.
    """
    ensure_valid(model, lob, problem)
    return solve_single_period(problem.inventory, problem.horizon, model, lob)


# ---------------------------------------------------------------------------
# Horizon threshold and first-order slope of the optimal offset
# ---------------------------------------------------------------------------


class GammaMode(str, enum.Enum):
    ZERO_GAMMA = "zero-gamma"
    AT_CANDIDATE_M = "at-candidate-m"


def _require_positive_drift(model: ModelParams) -> None:
    if not model.is_bm:
        raise ValueError("threshold analytics are defined for the arithmetic model")
    if not model.mu > 0:
        raise ValueError("mu must be > 0")


def spread_cost(lob: LobParams) -> float:
    return 2 * lob.d + lob.fee + lob.rebate


def t0_lower_bound(model: ModelParams, lob: LobParams) -> float:
    """(2d + f + r) / mu."""
    _require_positive_drift(model)
    return spread_cost(lob) / model.mu


def best_m_at_spread(inventory: float, t: float, model: ModelParams, lob: LobParams) -> float:
    return optimize_m(lob.d, inventory, t, model, lob).m_star


def spread_slope(
    t: float,
    model: ModelParams,
    lob: LobParams,
    problem: ExecutionProblem,
    gamma_mode: GammaMode = GammaMode.AT_CANDIDATE_M,
) -> float:
    """Per-share dECF/dy at y = d for horizon t."""
    if gamma_mode is GammaMode.ZERO_GAMMA:
        gamma = 0.0
    else:
        m = best_m_at_spread(problem.inventory, t, model, lob)
        gamma = float(gamma_term(m, problem.inventory, lob))
    return float(_decf_dy_per_share(lob.d, t, model, lob, gamma))


def t0_threshold(
    model: ModelParams,
    lob: LobParams,
    problem: ExecutionProblem,
    gamma_mode: GammaMode = GammaMode.AT_CANDIDATE_M,
    xtol: float = 1e-10,
) -> float:
    """Horizon beyond which resting the limit order above the spread pays.

    Root in T of dECF/dy at y = d. AT_CANDIDATE_M evaluates the impact
    term gamma at the optimal market order for each trial horizon, which
    reproduces where the joint optimizer leaves y = d. ZERO_GAMMA drops the
    impact term; its root always lies below (2d+f+r)/mu because the slope is
    already rho (2 N(h) - 1) > 0 there, so the bracket is walked downwards.
    """
    _require_positive_drift(model)
    ensure_valid(model, lob, problem)
    lo = t0_lower_bound(model, lob)
    hi = 100.0 * lo

    def g(t):
        return spread_slope(t, model, lob, problem, gamma_mode)

    if gamma_mode is GammaMode.ZERO_GAMMA and lo > 0 and g(lo) > 0:
        hi = lo
        for _ in range(80):
            lo *= 0.5
            if g(lo) < 0:
                break
        else:
            raise ValueError("no sign change of dECF/dy at y=d below (2d+f+r)/mu")
    if lo <= 0:
        raise ValueError("zero spread cost leaves no positive threshold")
    g_lo, g_hi = g(lo), g(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(f"no sign change of dECF/dy at y=d on [{lo}, {hi}]")
    return bisect_root(g, lo, hi, xtol)


def _h(t0: float, model: ModelParams) -> float:
    return model.mu * np.sqrt(t0) / model.sigma


def kappa_printed(t0: float, model: ModelParams, lob: LobParams, gamma: float) -> float:
    """Closed-form slope as stated alongside the threshold result.

    Kept for comparison only: on the reference fixtures it overstates the
    observed slope of y*(T) roughly threefold. Use :func:`kappa`.
    """
    if not t0 > 0:
        raise ValueError("t0 must be > 0")
    _require_positive_drift(model)
    mu, sigma = model.mu, model.sigma
    h = _h(t0, model)
    rt = np.sqrt(t0)
    c = spread_cost(lob)
    impact_term = lob.beta * gamma / (lob.rho * rt) if gamma != 0 else 0.0
    num = (
        3.0 * normal_pdf(-h) * sigma
        + sigma * sigma * (ndtr(h) - ndtr(-h)) / (2.0 * mu * rt)
        + 2.0 * (-h * ndtr(-h)) * (-c / rt + mu * rt + impact_term + sigma)
    )
    return float(num / (2.0 * ndtr(h) * rt))


def kappa_lower_bound(t0: float, model: ModelParams, lob: LobParams) -> float:
    """The printed slope with the impact term dropped."""
    return kappa_printed(t0, model, lob, 0.0)


def kappa(t0: float, model: ModelParams, lob: LobParams, problem: ExecutionProblem) -> float:
    """dy*/dT at (y = d, T = t0) from the implicit function theorem.

    Uses the envelope slope G(y, T) = dECF/dy evaluated at the optimal m
    for (y, T), so an interior optimal m moving with T is accounted for:
    kappa = -G_T / G_y, both taken by finite differences of the analytic
    y-derivative.
    """
    if not t0 > 0:
        raise ValueError("t0 must be > 0")
    _require_positive_drift(model)
    M = problem.inventory

    def G(y, t):
        m = optimize_m(y, M, t, model, lob).m_star
        if m >= M:
            raise ValueError("optimal market order takes the whole inventory; slope undefined")
        return float(_decf_dy(y, m, M, t, model, lob))

    hy = 1e-6 * model.sigma * np.sqrt(t0)
    ht = 1e-6 * t0
    d = lob.d
    g_y = (-3.0 * G(d, t0) + 4.0 * G(d + hy, t0) - G(d + 2 * hy, t0)) / (2 * hy)
    g_t = (G(d, t0 + ht) - G(d, t0 - ht)) / (2 * ht)
    return float(-g_t / g_y)
