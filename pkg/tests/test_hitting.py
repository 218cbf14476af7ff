import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from execlab.hitting import (
    GbmVariant,
    bm_hitting,
    bm_terms,
    branch_means,
    gbm_barrier_log,
    gbm_hitting,
    hitting,
)
from execlab.market import LobParams, ModelParams, PriceModel

LOB = LobParams()


def _killed_density(z, b, drift, s):
    """Density of X_t on {max X <= b} for X a drifted BM started at 0 (reflection principle)."""
    phi = lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi)
    return (phi((z - drift) / s) - np.exp(2 * drift * b / s ** 2) * phi((z - 2 * b - drift) / s)) / s


def _quad_bm(y, t, mu, sigma):
    b = y - LOB.d
    s = sigma * np.sqrt(t)
    f = lambda z: _killed_density(z, b, mu * t, s)
    lo = -mu * abs(t) - 40 * s - 1
    p = quad(f, lo, b, limit=200, epsabs=1e-13)[0]
    e = quad(lambda z: z * f(z), lo, b, limit=200, epsabs=1e-13)[0]
    return p, e, mu * t - e


def _quad_gbm(y, t, mu, sigma, s0=100.0):
    a = np.log((s0 + y - LOB.d) / s0)
    s = sigma * np.sqrt(t)
    nu = (mu - 0.5 * sigma ** 2) * t
    f = lambda z: _killed_density(z, a, nu, s)
    lo = nu - 40 * s
    p = quad(f, lo, a, limit=200, epsabs=1e-14)[0]
    e = s0 * quad(lambda z: np.exp(z) * f(z), lo, a, limit=200, epsabs=1e-12)[0]
    return p, e, s0 * np.exp(mu * t) - e


@pytest.mark.parametrize("mu,sigma,t,gap", [
    (-0.5, 0.1, 0.1, 0.3), (0.0, 0.1, 0.1, 1.0), (0.5, 0.2, 0.5, 0.7), (1.0, 0.1, 0.1, 2.0), (-1.0, 0.3, 1.0, 0.1),
])
def test_bm_moments_match_numerical_integration(mu, sigma, t, gap):
    y = LOB.d + gap * sigma * np.sqrt(t)
    hm = bm_hitting(y, t, ModelParams(mu=mu, sigma=sigma), LOB)
    p, es, eh = _quad_bm(y, t, mu, sigma)
    assert hm.p_survive == pytest.approx(p, abs=1e-9)
    assert hm.e_on_survive == pytest.approx(es, abs=1e-9)
    assert hm.e_on_hit == pytest.approx(eh, abs=1e-9)


@pytest.mark.parametrize("mu,sigma,t,y", [
    (0.1, 0.01, 0.1, 0.05), (0.1, 0.3, 1.0, 20.0), (-0.1, 0.4, 1.0, 30.0), (0.3, 0.2, 0.5, 3.0),
])
def test_gbm_corrected_matches_numerical_integration(mu, sigma, t, y):
    model = ModelParams(PriceModel.GEOMETRIC_BM, 100.0, mu, sigma)
    hm = gbm_hitting(y, t, model, LOB)
    p, es, eh = _quad_gbm(y, t, mu, sigma)
    assert hm.p_survive == pytest.approx(p, abs=1e-9)
    assert hm.e_on_survive == pytest.approx(es, rel=1e-8, abs=1e-8)
    assert hm.e_on_hit == pytest.approx(eh, rel=1e-8, abs=1e-8)


def test_gbm_printed_variant_differs_at_high_volatility():
    model = ModelParams(PriceModel.GEOMETRIC_BM, 100.0, 0.1, 0.3)
    _, es, _ = _quad_gbm(20.0, 1.0, 0.1, 0.3)
    printed = gbm_hitting(20.0, 1.0, model, LOB, GbmVariant.PRINTED)
    assert abs(printed.e_on_survive - es) > 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2), st.floats(0.01, 1.0), st.floats(0.001, 2.0), st.floats(0, 5))
def test_bm_conservation_and_ranges(mu, sigma, t, gap):
    y = LOB.d + gap * sigma * np.sqrt(t)
    hm = bm_hitting(y, t, ModelParams(mu=mu, sigma=sigma), LOB)
    assert 0.0 <= hm.p_survive <= 1.0
    assert abs(hm.e_on_survive + hm.e_on_hit - mu * t) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.005, 0.5), st.floats(0.001, 2.0), st.floats(0, 50))
def test_gbm_conservation(mu, sigma, t, offset):
    model = ModelParams(PriceModel.GEOMETRIC_BM, 100.0, mu, sigma)
    for variant in GbmVariant:
        hm = gbm_hitting(LOB.d + offset, t, model, LOB, variant)
        total = 100.0 * np.exp(mu * t)
        assert abs(hm.e_on_survive + hm.e_on_hit - total) <= 1e-10 * total


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 0.5), st.floats(0.01, 1.0), st.floats(0, 3), st.floats(0.001, 1))
def test_survival_increases_with_offset(mu, sigma, t, gap, extra):
    model = ModelParams(mu=mu, sigma=sigma)
    s = sigma * np.sqrt(t)
    lo = bm_hitting(LOB.d + gap * s, t, model, LOB).p_survive
    hi = bm_hitting(LOB.d + (gap + extra) * s, t, model, LOB).p_survive
    assert hi >= lo - 1e-12


def test_barrier_at_start_is_hit_immediately():
    hm = bm_hitting(LOB.d, 0.1, ModelParams(mu=0.3), LOB)
    assert hm.p_survive == 0.0
    assert hm.e_on_survive == 0.0
    assert hm.e_on_hit == pytest.approx(0.03, abs=1e-15)
    g = gbm_hitting(LOB.d, 0.1, ModelParams(PriceModel.GEOMETRIC_BM, 100, 0.3, 0.1), LOB)
    assert g.p_survive == 0.0 and g.e_on_survive == 0.0


def test_far_barrier_limits():
    for mu in (-0.5, 0.5):
        model = ModelParams(mu=mu, sigma=0.1)
        t = 0.1
        y = LOB.d + 20 * 0.1 * np.sqrt(t) + abs(mu) * t
        hm = bm_hitting(y, t, model, LOB)
        assert hm.p_survive == pytest.approx(1.0, abs=1e-8)
        assert abs(hm.e_on_hit) < 1e-8
    g = ModelParams(PriceModel.GEOMETRIC_BM, 100, 0.1, 0.01)
    hm = gbm_hitting(LOB.d + 100 * (np.exp(20 * 0.01 * np.sqrt(0.1) + 0.01) - 1), 0.1, g, LOB)
    assert hm.p_survive == pytest.approx(1.0, abs=1e-8)
    assert abs(hm.e_on_hit) < 1e-8


def test_gbm_approaches_bm_for_small_volatility():
    s0, mu_g, sig_g, t = 100.0, 0.001, 0.001, 0.1
    y = LOB.d + 0.05
    g = gbm_hitting(y, t, ModelParams(PriceModel.GEOMETRIC_BM, s0, mu_g, sig_g), LOB)
    b = bm_hitting(y, t, ModelParams(mu=s0 * mu_g, sigma=s0 * sig_g), LOB)
    assert g.p_survive == pytest.approx(b.p_survive, abs=2e-3)
    assert g.e_on_survive - s0 * g.p_survive == pytest.approx(b.e_on_survive, abs=2e-3)


def test_large_exponent_does_not_overflow():
    hm = bm_hitting(LOB.d + 3.0, 1.0, ModelParams(mu=5.0, sigma=0.05), LOB)
    assert np.isfinite([hm.p_survive, hm.e_on_survive, hm.e_on_hit]).all()


def test_vectorized_offsets():
    ys = np.array([0.005, 0.01, 0.05])
    hm = bm_hitting(ys, 0.1, ModelParams(mu=0.2), LOB)
    for i, y in enumerate(ys):
        assert hm.p_survive[i] == bm_hitting(y, 0.1, ModelParams(mu=0.2), LOB).p_survive


def test_terms_identity():
    k = bm_terms(0.02, 0.1, ModelParams(mu=0.4, sigma=0.1), LOB)
    assert k.alpha - k.beta == pytest.approx(2 * 0.4 * 0.1 / (0.1 * np.sqrt(0.1)))


def test_barrier_log_and_rejections():
    g = ModelParams(PriceModel.GEOMETRIC_BM, 100, 0.1, 0.1)
    assert gbm_barrier_log(LOB.d + 1.0, g, LOB) == pytest.approx(np.log(1.01))
    with pytest.raises(ValueError):
        bm_hitting(0.0, 0.1, ModelParams(), LOB)
    with pytest.raises(ValueError):
        bm_hitting(0.01, 0.0, ModelParams(), LOB)
    with pytest.raises(ValueError):
        gbm_hitting(0.01, 0.1, ModelParams(), LOB)
    with pytest.raises(ValueError):
        bm_hitting(0.01, 0.1, g, LOB)


def test_branch_means_combine_to_total():
    model = ModelParams(mu=0.3, sigma=0.2)
    p_s, m_s, m_h = branch_means(0.03, 0.5, model, LOB)
    assert p_s * m_s + (1 - p_s) * m_h == pytest.approx(100 + 0.15, abs=1e-12)
    assert m_s < 100 + 0.03 - LOB.d  # survivors never touched the barrier
    p_s, m_s, m_h = branch_means(LOB.d, 0.5, model, LOB)
    assert p_s == 0 and m_s == pytest.approx(100.15)


def test_dispatch():
    g = ModelParams(PriceModel.GEOMETRIC_BM, 100, 0.1, 0.1)
    assert hitting(0.02, 0.1, g, LOB) == gbm_hitting(0.02, 0.1, g, LOB)
