"""First-passage laws of the mid-price through a limit-order barrier.

The barrier sits at s0 + y - d: a sell limit order resting at s0 + y becomes
the best ask once the mid-price plus the half-spread reaches it. For both
price models we need the survival probability and the expectation of the
price split across the survival/hit events.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .market import LobParams, ModelParams

SQRT_2PI = np.sqrt(2.0 * np.pi)


def normal_cdf(z):
    return ndtr(z)


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / SQRT_2PI


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


class GbmVariant(str, enum.Enum):
    """Which argument shift to use inside the GBM restricted expectations.

    CORRECTED integrates e^z against the reflected density and gives
    (+-a - mu t - sigma^2 t/2)/(sigma sqrt t); PRINTED keeps the +sigma^2 t/2
    shift of the survival probability. Only CORRECTED matches simulation;
    PRINTED is kept for the adjudication report.
    """

    CORRECTED = "corrected"
    PRINTED = "printed"


@dataclass(frozen=True)
class HittingMoments:
    """p_survive = P(tau > t); the two expectations split the price functional.

    For the arithmetic model the functional is the increment S(t) - S(0);
    for the geometric model it is S(t) itself.
    """

    p_survive: float | np.ndarray
    e_on_survive: float | np.ndarray
    e_on_hit: float | np.ndarray

    @property
    def p_hit(self):
        return 1.0 - self.p_survive


@dataclass(frozen=True)
class BmTerms:
    """Shorthand quantities for the arithmetic model at offset x = y - d.

    alpha = (x + mu t)/(sigma sqrt t), beta = (x - mu t)/(sigma sqrt t),
    n_tilde = exp(2 x mu / sigma^2) N(-alpha), eps0 = N(beta) - n_tilde.
    """

    x: np.ndarray
    t: float
    alpha: np.ndarray
    beta: np.ndarray
    n_tilde: np.ndarray
    eps0: np.ndarray


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"time must be > 0, got {t}")


def _offsets(y, lob: LobParams) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < lob.d):
        raise ValueError("limit offset y must be >= d")
    return y - lob.d


def log_reflection_weight(x, mu: float, sigma: float, t: float, arg):
    """log(exp(2 x mu / sigma^2) * N(arg)) without overflow."""
    return 2.0 * x * mu / (sigma * sigma) + log_ndtr(arg)


def bm_terms(y, t: float, model: ModelParams, lob: LobParams) -> BmTerms:
    _check_t(t)
    x = _offsets(y, lob)
    mu, sigma = model.mu, model.sigma
    s = sigma * np.sqrt(t)
    alpha = (x + mu * t) / s
    beta = (x - mu * t) / s
    n_tilde = np.exp(log_reflection_weight(x, mu, sigma, t, -alpha))
    eps0 = ndtr(beta) - n_tilde
    # the two normal terms cancel exactly at the barrier
    eps0 = np.where(x == 0.0, 0.0, np.clip(eps0, 0.0, 1.0))
    return BmTerms(x=x, t=t, alpha=alpha, beta=beta, n_tilde=n_tilde, eps0=eps0)


def bm_hitting(y, t: float, model: ModelParams, lob: LobParams) -> HittingMoments:
    """Survival probability and increment expectations for arithmetic BM."""
    if not model.is_bm:
        raise ValueError("bm_hitting requires the arithmetic model")
    k = bm_terms(y, t, model, lob)
    mut = model.mu * t
    e_surv = mut * ndtr(k.beta) - (2.0 * k.x + mut) * k.n_tilde
    e_hit = mut * ndtr(-k.beta) + (2.0 * k.x + mut) * k.n_tilde
    at_barrier = k.x == 0.0
    e_surv = np.where(at_barrier, 0.0, e_surv)
    e_hit = np.where(at_barrier, mut, e_hit)
    return HittingMoments(_scalar(k.eps0), _scalar(e_surv), _scalar(e_hit))


def gbm_barrier_log(y, model: ModelParams, lob: LobParams):
    """a = ln((s0 + y - d) / s0), the barrier in log-price space."""
    y = np.asarray(y, dtype=float)
    level = model.s0 + y - lob.d
    if np.any(level <= 0):
        raise ValueError("barrier s0 + y - d must be positive")
    return _scalar(np.log1p((y - lob.d) / model.s0))


def gbm_hitting(
    y,
    t: float,
    model: ModelParams,
    lob: LobParams,
    variant: GbmVariant = GbmVariant.CORRECTED,
) -> HittingMoments:
    """Survival probability and price expectations for geometric BM."""
    if model.is_bm:
        raise ValueError("gbm_hitting requires the geometric model")
    _check_t(t)
    _offsets(y, lob)
    a = np.asarray(gbm_barrier_log(y, model, lob), dtype=float)
    mu, sigma, s0 = model.mu, model.sigma, model.s0
    s = sigma * np.sqrt(t)
    half_var = 0.5 * sigma * sigma * t
    nu_t = mu * t - half_var

    # log-price drift is mu - sigma^2/2, hence exp(2 a nu / sigma^2) = exp(2 a mu/sigma^2 - a)
    p_surv = ndtr((a - nu_t) / s) - np.exp(
        2.0 * a * mu / (sigma * sigma) - a + log_ndtr((-a - nu_t) / s)
    )
    p_surv = np.where(a == 0.0, 0.0, np.clip(p_surv, 0.0, 1.0))

    shift = -half_var if variant is GbmVariant.CORRECTED else half_var
    up = (a - mu * t + shift) / s
    down = (-a - mu * t + shift) / s
    growth = np.exp(mu * t)
    e_surv = s0 * (
        growth * ndtr(up)
        - np.exp(2.0 * a * mu / (sigma * sigma) + a + mu * t + log_ndtr(down))
    )
    e_surv = np.where(a == 0.0, 0.0, e_surv)
    e_hit = s0 * growth - e_surv
    return HittingMoments(_scalar(p_surv), _scalar(e_surv), _scalar(e_hit))


def hitting(y, t: float, model: ModelParams, lob: LobParams) -> HittingMoments:
    """Dispatch on the price model; GBM uses the corrected expectations."""
    if model.is_bm:
        return bm_hitting(y, t, model, lob)
    return gbm_hitting(y, t, model, lob)


def branch_means(y, t: float, model: ModelParams, lob: LobParams, mid: float | None = None):
    """Conditional mean mid-price at t on the survival and hit events.

    Returns (p_survive, mean_if_survive, mean_if_hit). Where an event has
    zero probability the unconditional mean is returned for it.
    """
    if mid is not None and mid != model.s0:
        model = ModelParams(model.kind, mid, model.mu, model.sigma)
    hm = hitting(y, t, model, lob)
    p_s = np.asarray(hm.p_survive, dtype=float)
    p_h = 1.0 - p_s
    if model.is_bm:
        total = model.mu * t
        base = model.s0
    else:
        total = model.s0 * np.exp(model.mu * t)
        base = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        m_s = np.where(p_s > 0, np.asarray(hm.e_on_survive) / np.where(p_s > 0, p_s, 1.0), total)
        m_h = np.where(p_h > 0, np.asarray(hm.e_on_hit) / np.where(p_h > 0, p_h, 1.0), total)
    return _scalar(p_s), _scalar(base + m_s), _scalar(base + m_h)
