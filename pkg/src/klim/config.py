"""Experiment configuration shared by the CLI and the verification suites."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .errors import SpecError
from .model import ModelSpec

OUTPUTS = ("json", "csv")
GRIDS = ("uniform", "log")


def _real(d: dict, key: str, *, positive: bool = False, optional: bool = False):
    val = d.get(key)
    if val is None and optional:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise SpecError(key, f"expected a real number, got {val!r}")
    if positive and val <= 0:
        raise SpecError(key, "must be > 0")
    return float(val)


def _int(d: dict, key: str, *, optional: bool = False):
    val = d.get(key)
    if val is None and optional:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise SpecError(key, f"expected an integer, got {val!r}")
    return val


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    epsilon: float = 1e-2
    n_paths: int = 10_000
    n_steps: int | None = None
    seed: int = 0
    t_eval: tuple = (1.0,)
    output: str = "json"
    margin: float | None = None
    grid: str = "uniform"

    def __post_init__(self):
        d = self.to_dict()
        _real(d, "epsilon", positive=True)
        if not self.epsilon <= 1:
            raise SpecError("epsilon", "must lie in (0, 1]")
        if _int(d, "n_paths") < 1:
            raise SpecError("n_paths", "must be >= 1")
        n_steps = _int(d, "n_steps", optional=True)
        if n_steps is not None and n_steps < 1:
            raise SpecError("n_steps", "must be >= 1")
        if not 0 <= _int(d, "seed") < 2**64:
            raise SpecError("seed", "must fit in 64 unsigned bits")
        if not self.t_eval or any(isinstance(t, bool) or not isinstance(t, (int, float)) or t <= 0
                                  for t in self.t_eval):
            raise SpecError("t_eval", "expected a non-empty list of positive times")
        object.__setattr__(self, "t_eval", tuple(float(t) for t in self.t_eval))
        if self.output not in OUTPUTS:
            raise SpecError("output", f"expected one of {OUTPUTS}")
        _real(d, "margin", optional=True)
        if self.grid not in GRIDS:
            raise SpecError("grid", f"expected one of {GRIDS}")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "epsilon": self.epsilon,
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "seed": self.seed,
            "t_eval": list(self.t_eval),
            "output": self.output,
            "margin": self.margin,
            "grid": self.grid,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise SpecError("config", "expected a JSON object")
        if "model" not in d or not isinstance(d["model"], dict):
            raise SpecError("model", "expected an object")
        extra = set(d) - {"model", "epsilon", "n_paths", "n_steps", "seed", "t_eval",
                          "output", "margin", "grid"}
        if extra:
            raise SpecError(sorted(extra)[0], "unknown config key")
        kw = {k: v for k, v in d.items() if k != "model"}
        if "t_eval" in kw:
            if not isinstance(kw["t_eval"], list):
                raise SpecError("t_eval", "expected a list")
            kw["t_eval"] = tuple(kw["t_eval"])
        return cls(ModelSpec.from_dict(d["model"]), **kw)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError("config", f"invalid JSON: {exc}") from None
        return cls.from_dict(d)
