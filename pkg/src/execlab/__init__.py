"""Optimal limit/market order placement under liquidity cost."""

from .market import (
    Decision,
    ExecutionProblem,
    LobParams,
    ModelParams,
    PriceModel,
    negative_part,
    sell_price,
    validate,
)

__all__ = [
    "Decision",
    "ExecutionProblem",
    "LobParams",
    "ModelParams",
    "PriceModel",
    "negative_part",
    "sell_price",
    "validate",
]
