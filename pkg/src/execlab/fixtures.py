"""Pinned parameter sets shared by the validation command and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

from .market import Decision, ExecutionProblem, LobParams, ModelParams, PriceModel

BM = PriceModel.ARITHMETIC_BM
GBM = PriceModel.GEOMETRIC_BM

# Baseline book and problem used by most figures: M = 100, r = f = 0.003,
# half-spread 0.005, T = 0.1, S0 = 100, sigma = 0.1.
BASE_LOB = LobParams(d=0.005, k_depth=10.0, beta=0.01, fee=0.003, rebate=0.003, rho=0.2)
BASE_PROBLEM = ExecutionProblem(inventory=100.0, horizon=0.1, periods=1)


def bm(mu: float, sigma: float = 0.1, s0: float = 100.0) -> ModelParams:
    return ModelParams(BM, s0, mu, sigma)


def gbm(mu: float, sigma: float = 0.01, s0: float = 100.0) -> ModelParams:
    return ModelParams(GBM, s0, mu, sigma)


@dataclass(frozen=True)
class HittingFixture:
    name: str
    model: ModelParams
    y: float
    t: float


@dataclass(frozen=True)
class CashFixture:
    name: str
    model: ModelParams
    lob: LobParams
    problem: ExecutionProblem
    decision: Decision


def _hitting_fixtures() -> list[HittingFixture]:
    out = []
    for mu in (-0.5, 0.0, 0.5):
        for sigma, t in ((0.1, 0.1), (0.2, 0.5)):
            for gap in (0.25, 0.75, 1.5):
                # barrier distance in units of sigma sqrt(t), above the half-spread
                y = 0.005 + gap * sigma * t ** 0.5
                out.append(HittingFixture(f"bm_mu{mu:+g}_s{sigma:g}_t{t:g}_g{gap:g}", bm(mu, sigma), y, t))
    for mu, sigma, t, gap in ((1.0, 0.1, 0.1, 1.0), (-1.0, 0.15, 0.25, 0.8)):
        y = 0.005 + gap * sigma * t ** 0.5
        out.append(HittingFixture(f"bm_mu{mu:+g}_s{sigma:g}_t{t:g}_g{gap:g}", bm(mu, sigma), y, t))
    gbm_cases = [
        (0.1, 0.01, 0.1, 0.05), (-0.1, 0.01, 0.1, 0.02), (0.2, 0.01, 0.1, 2.0),
        (0.1, 0.3, 1.0, 20.0), (0.05, 0.2, 0.5, 5.0), (-0.1, 0.4, 1.0, 30.0),
        (0.2, 0.25, 1.0, 10.0), (0.0, 0.3, 0.25, 8.0), (0.3, 0.35, 1.0, 40.0),
        (-0.2, 0.3, 0.5, 3.0),
    ]
    for mu, sigma, t, y in gbm_cases:
        out.append(HittingFixture(f"gbm_mu{mu:+g}_s{sigma:g}_t{t:g}_y{y:g}", gbm(mu, sigma), y, t))
    return out


HITTING_FIXTURES: list[HittingFixture] = _hitting_fixtures()


def _single_fixtures() -> list[CashFixture]:
    cases = [
        (bm(-0.5), BASE_LOB, Decision(0.01, 30)),
        (bm(-0.5), BASE_LOB, Decision(0.005, 50)),
        (bm(0.5), BASE_LOB, Decision(0.02, 20)),
        (bm(0.5), LobParams(rho=0.5), Decision(0.03, 0)),
        (bm(0.0, 0.2), LobParams(rho=0.8, k_depth=50), Decision(0.015, 60)),
        (bm(-0.2), LobParams(rho=1.0, k_depth=150), Decision(0.01, 10)),
        (bm(1.0), LobParams(rho=0.4, beta=0.005), Decision(0.05, 5)),
        (gbm(0.1), BASE_LOB, Decision(0.01, 20)),
        (gbm(-0.1), LobParams(rho=0.6), Decision(0.02, 40)),
        (gbm(0.2, 0.05), LobParams(rho=0.3, k_depth=70), Decision(0.1, 80)),
    ]
    return [CashFixture(f"single_{i:02d}", m, lob, BASE_PROBLEM, dec) for i, (m, lob, dec) in enumerate(cases)]


def _two_period_fixtures() -> list[CashFixture]:
    two = ExecutionProblem(inventory=100.0, horizon=0.1, periods=2)
    cases = [
        (bm(-0.3), LobParams(rho=0.4), Decision(0.005, 0)),
        (bm(-0.3), LobParams(rho=0.4), Decision(0.005, 10)),
        (bm(-0.3), LobParams(rho=0.4), Decision(0.005, 20)),
        (bm(-0.3), LobParams(rho=0.4), Decision(0.005, 40)),
        (bm(-0.3), LobParams(rho=0.4), Decision(0.02, 10)),
        (bm(-0.5), LobParams(rho=1.0), Decision(0.005, 0)),
        (bm(0.5), LobParams(rho=0.2), Decision(0.02, 10)),
        (bm(0.5), LobParams(rho=0.6, k_depth=50), Decision(0.01, 30)),
        (bm(-0.1, 0.2), LobParams(rho=0.8), Decision(0.03, 5)),
        (bm(0.2), LobParams(rho=0.5, beta=0.005), Decision(0.015, 0)),
    ]
    return [CashFixture(f"two_period_{i:02d}", m, lob, two, dec) for i, (m, lob, dec) in enumerate(cases)]


SINGLE_FIXTURES: list[CashFixture] = _single_fixtures()
TWO_PERIOD_FIXTURES: list[CashFixture] = _two_period_fixtures()
