"""Flat ``key = value`` run configuration.

One pair per line; ``#`` starts a comment; blank lines are ignored.
Unknown keys and repeated keys are errors. Missing keys take the
library defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .market import ExecutionProblem, LobParams, ModelParams, PriceModel, validate

MODEL_KEYS = ("s0", "mu", "sigma")
LOB_KEYS = ("d", "k_depth", "beta", "fee", "rebate", "rho")
PROBLEM_KEYS = ("inventory", "horizon", "periods")
NUMERIC_KEYS = MODEL_KEYS + LOB_KEYS + PROBLEM_KEYS
KEYS = ("model",) + NUMERIC_KEYS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = ModelParams()
    lob: LobParams = LobParams()
    problem: ExecutionProblem = ExecutionProblem()

    def errors(self) -> list[str]:
        return validate(self.model, self.lob, self.problem)

    def with_value(self, key: str, value) -> "RunConfig":
        """Copy with one key replaced; used by sweeps."""
        if key == "model":
            return replace(self, model=replace(self.model, kind=PriceModel.parse(str(value))))
        if key in MODEL_KEYS:
            return replace(self, model=replace(self.model, **{key: float(value)}))
        if key in LOB_KEYS:
            return replace(self, lob=replace(self.lob, **{key: float(value)}))
        if key == "periods":
            return replace(self, problem=replace(self.problem, periods=_as_int(key, value)))
        if key in PROBLEM_KEYS:
            return replace(self, problem=replace(self.problem, **{key: float(value)}))
        raise ConfigError(f"unknown key {key!r}")

    def get(self, key: str):
        if key == "model":
            return self.model.kind.value
        for obj in (self.model, self.lob, self.problem):
            if hasattr(obj, key):
                return getattr(obj, key)
        raise ConfigError(f"unknown key {key!r}")


def _as_int(key, value) -> int:
    v = float(value)
    if v != int(v):
        raise ConfigError(f"{key} must be an integer, got {value}")
    return int(v)


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            cfg = cfg.with_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: RunConfig) -> str:
    lines = [f"model = {cfg.model.kind.value}"]
    lines += [f"{k} = {cfg.get(k)!r}" for k in NUMERIC_KEYS]
    return "\n".join(lines) + "\n"
