"""Market and problem parameters, the sell-side supply curve, and validation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np


class PriceModel(str, enum.Enum):
    ARITHMETIC_BM = "bm"
    GEOMETRIC_BM = "gbm"

    @classmethod
    def parse(cls, text: str) -> "PriceModel":
        key = text.strip().lower()
        aliases = {
            "bm": cls.ARITHMETIC_BM,
            "arithmetic": cls.ARITHMETIC_BM,
            "arithmeticbm": cls.ARITHMETIC_BM,
            "gbm": cls.GEOMETRIC_BM,
            "geometric": cls.GEOMETRIC_BM,
            "geometricbm": cls.GEOMETRIC_BM,
        }
        if key not in aliases:
            raise ValueError(f"unknown price model {text!r} (expected bm or gbm)")
        return aliases[key]


@dataclass(frozen=True)
class ModelParams:
    """Mid-price dynamics: S(t) = s0 + mu t + sigma W (bm) or GBM with drift mu."""

    kind: PriceModel = PriceModel.ARITHMETIC_BM
    s0: float = 100.0
    mu: float = 0.0
    sigma: float = 0.1

    @property
    def is_bm(self) -> bool:
        return self.kind is PriceModel.ARITHMETIC_BM


@dataclass(frozen=True)
class LobParams:
    """Book microstructure.

    d is the half-spread, k_depth the shares absorbable at the best bid,
    beta the impact slope beyond that depth, fee/rebate are per share on
    market/limit executions and rho is the fraction of a resting limit
    order that fills once its level becomes the best ask.
    """

    d: float = 0.005
    k_depth: float = 10.0
    beta: float = 0.01
    fee: float = 0.003
    rebate: float = 0.003
    rho: float = 0.2


@dataclass(frozen=True)
class ExecutionProblem:
    inventory: float = 100.0
    horizon: float = 0.1
    periods: int = 1

    @property
    def period_length(self) -> float:
        return self.horizon / self.periods


@dataclass(frozen=True)
class Decision:
    """Limit order resting at s0 + y for the M - m shares not sold immediately."""

    y: float
    m: float


def negative_part(z):
    """(z)^- = max(-z, 0). Works elementwise on arrays."""
    return np.maximum(np.negative(z), 0.0)


def impact(lob: LobParams, shares):
    """Per-share price concession beta * (shares - K)^+ for a sale of `shares`."""
    return lob.beta * negative_part(lob.k_depth - np.asarray(shares, dtype=float))


def sell_price(model: ModelParams, lob: LobParams, mid: float, m: float) -> float:
    """Per-share price received when selling m shares at mid-price `mid`."""
    if m < 0:
        raise ValueError(f"sell size must be >= 0, got {m}")
    return float(mid - lob.d - impact(lob, m))


def validate(
    model: ModelParams | None = None,
    lob: LobParams | None = None,
    problem: ExecutionProblem | None = None,
    decision: Decision | None = None,
) -> list[str]:
    """Return every violated parameter invariant; an empty list means valid."""
    errors: list[str] = []

    def finite(obj):
        for f in fields(obj):
            value = getattr(obj, f.name)
            if isinstance(value, (int, float)) and not math.isfinite(value):
                errors.append(f"{f.name} must be finite")

    if model is not None:
        finite(model)
        if not model.sigma > 0:
            errors.append("sigma must be > 0")
        if not model.s0 > 0:
            errors.append("s0 must be > 0")
    if lob is not None:
        finite(lob)
        if lob.d < 0:
            errors.append("d must be >= 0")
        if lob.k_depth < 0:
            errors.append("k_depth must be >= 0")
        if lob.beta < 0:
            errors.append("beta must be >= 0")
        if lob.fee < 0:
            errors.append("fee must be >= 0")
        if lob.rebate < 0:
            errors.append("rebate must be >= 0")
        if not 0.0 <= lob.rho <= 1.0:
            errors.append("rho must lie in [0,1]")
    if problem is not None:
        finite(problem)
        if not problem.inventory > 0:
            errors.append("inventory must be > 0")
        if not problem.horizon > 0:
            errors.append("horizon must be > 0")
        if int(problem.periods) != problem.periods or problem.periods < 1:
            errors.append("periods must be an integer >= 1")
    if decision is not None:
        finite(decision)
        if lob is not None and decision.y < lob.d:
            errors.append("y must be >= d")
        if decision.m < 0:
            errors.append("m must be >= 0")
        if problem is not None and decision.m > problem.inventory:
            errors.append("m must be <= inventory")
        if (
            model is not None
            and lob is not None
            and not model.is_bm
            and model.s0 + decision.y - lob.d <= 0
        ):
            errors.append("s0 + y - d must be > 0 for the geometric model")
    return errors


class InvalidParameters(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(errors))


def ensure_valid(*args, **kwargs) -> None:
    errors = validate(*args, **kwargs)
    if errors:
        raise InvalidParameters(errors)
