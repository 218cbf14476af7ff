import numpy as np
import pytest

from execlab.fixtures import bm, gbm
from execlab.hitting import hitting
from execlab.market import Decision, ExecutionProblem, InvalidParameters, LobParams
from execlab.montecarlo import (
    SimConfig,
    crossing_probability,
    simulate_hitting,
    simulate_multi_period,
    simulate_single_period,
    thread_count,
)
from execlab.multi_period import PeriodState, mecf
from execlab.single_period import ecf

LOB = LobParams(k_depth=10, rho=0.2)
PROB = ExecutionProblem(100.0, 0.1, 1)
SMALL = SimConfig(n_paths=20_000, seed=11)


def test_bridge_crossing_examples():
    sigma, dt, b = 0.2, 0.01, 1.0
    x = b - sigma * np.sqrt(dt)
    assert crossing_probability(x, x, b, dt, sigma) == pytest.approx(np.exp(-2.0), rel=1e-14)
    assert crossing_probability(0.0, 1.5, b, dt, sigma) == 1.0
    assert crossing_probability(b, 0.0, b, dt, sigma) == 1.0
    assert crossing_probability(0.0, 0.0, 1e6, dt, sigma) == 0.0


def test_bridge_crossing_vectorized_and_guarded():
    p = crossing_probability(np.zeros(3), np.array([0.0, 0.5, 2.0]), 1.0, 0.1, 1.0)
    assert p.shape == (3,) and p[2] == 1.0 and 0 < p[0] < p[1] < 1
    with pytest.raises(ValueError):
        crossing_probability(0, 0, 1, 0.0, 1.0)


def test_bridge_matches_one_step_reflection_law():
    # with a single step the bridge correction is the whole hitting law
    model, y, t = bm(0.0, 0.1), 0.005 + 0.05, 0.2
    est = simulate_hitting(y, t, model, LobParams(), SimConfig(n_paths=200_000, steps_per_period=1, seed=3))
    assert abs(est.p_survive.z_score(float(hitting(y, t, model, LobParams()).p_survive))) < 4


def test_order_at_spread_is_always_reached():
    est = simulate_single_period(Decision(0.005, 10), bm(0.1), LOB, PROB, SMALL)
    assert est.hit_fraction == 1.0


def test_far_order_with_tiny_volatility_never_fills():
    est = simulate_single_period(Decision(1.0, 10), bm(0.0, 1e-4), LOB, PROB, SMALL)
    assert est.hit_fraction == 0.0


def test_results_do_not_depend_on_thread_count(monkeypatch):
    dec = Decision(0.02, 20)
    runs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("EXECLAB_THREADS", threads)
        runs.append(simulate_single_period(dec, bm(0.3), LOB, PROB, SMALL))
    assert runs[0] == runs[1]


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("EXECLAB_THREADS", "5")
    assert thread_count() == 5
    monkeypatch.setenv("EXECLAB_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("EXECLAB_THREADS", "-2")
    with pytest.raises(ValueError):
        thread_count()


def test_seed_and_stream_change_the_draws():
    dec = Decision(0.02, 20)
    a = simulate_single_period(dec, bm(0.3), LOB, PROB, SMALL)
    b = simulate_single_period(dec, bm(0.3), LOB, PROB, SimConfig(n_paths=20_000, seed=12))
    c = simulate_single_period(dec, bm(0.3), LOB, PROB, SimConfig(n_paths=20_000, seed=11, stream=1))
    assert a.mean != b.mean and a.mean != c.mean


def test_antithetic_estimate_agrees_and_uses_pairs():
    dec = Decision(0.02, 20)
    target = ecf(dec, bm(0.3), LOB, PROB).total
    plain = simulate_single_period(dec, bm(0.3), LOB, PROB, SimConfig(n_paths=40_000, seed=5))
    anti = simulate_single_period(dec, bm(0.3), LOB, PROB, SimConfig(n_paths=40_000, seed=5, antithetic=True))
    assert abs(anti.z_score(target)) < 4 and abs(plain.z_score(target)) < 4
    assert anti.n_paths == 40_000


@pytest.mark.parametrize("model", [bm(-0.3), bm(0.4), gbm(0.1)], ids=["bm-", "bm+", "gbm"])
def test_single_period_simulation_agrees_with_closed_form(model):
    dec = Decision(0.02, 15)
    est = simulate_single_period(dec, model, LOB, PROB, SimConfig(n_paths=100_000, seed=21))
    assert abs(est.z_score(ecf(dec, model, LOB, PROB).total)) < 4


def test_selling_everything_first_makes_periods_irrelevant():
    dec = Decision(0.01, 100)
    one = simulate_single_period(dec, bm(0.2), LOB, PROB, SMALL)
    two = simulate_multi_period(dec, 2, bm(0.2), LOB, ExecutionProblem(periods=2), SMALL)
    assert one.mean == pytest.approx(two.mean, rel=1e-14)
    assert one.std_error == 0 and two.std_error == 0


def test_time_step_refinement_is_within_noise():
    dec, model = Decision(0.03, 10), bm(0.2, 0.15)
    coarse = simulate_single_period(dec, model, LOB, PROB, SimConfig(n_paths=100_000, steps_per_period=8, seed=9))
    fine = simulate_single_period(dec, model, LOB, PROB, SimConfig(n_paths=100_000, steps_per_period=16, seed=9))
    assert abs(coarse.mean - fine.mean) <= 2 * np.hypot(coarse.std_error, fine.std_error)


@pytest.mark.parametrize("n", [2, 3])
def test_full_fill_policy_earns_spread_and_rebate(n):
    lob, problem = LobParams(rho=1.0), ExecutionProblem(periods=n)
    est = simulate_multi_period(Decision(0.005, 0), n, bm(-0.5), lob, problem, SMALL)
    assert est.mean == pytest.approx(10000.8, rel=1e-12)


def test_two_period_simulation_agrees_with_recursion():
    model, problem, dec = bm(-0.3), ExecutionProblem(periods=2), Decision(0.005, 20)
    value = mecf(2, PeriodState(100, 100, 0.1, 2), dec, model, LobParams(rho=0.4))
    est = simulate_multi_period(dec, 2, model, LobParams(rho=0.4), problem, SimConfig(n_paths=100_000, seed=4))
    assert abs(est.z_score(value)) < 4


def test_config_and_input_validation():
    with pytest.raises(ValueError):
        SimConfig(n_paths=0)
    with pytest.raises(ValueError):
        SimConfig(block_size=3)
    with pytest.raises(ValueError):
        SimConfig(seed=-1)
    with pytest.raises(InvalidParameters):
        simulate_single_period(Decision(0.001, 0), bm(0.1), LOB, PROB, SMALL)
    with pytest.raises(ValueError):
        simulate_multi_period(Decision(0.01, 0), 0, bm(0.1), LOB, PROB, SMALL)
