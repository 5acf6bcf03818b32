"""Drift families, model parameters and regime classification."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import SpecError

REGIME_TOL = 1e-12

SUPER_CRITICAL = "super_critical"
CRITICAL = "critical"
SUB_CRITICAL = "sub_critical"

ALMOST_SURELY_GLOBAL = "almost_surely_global"
GLOBAL_WITH_POSITIVE_PROB = "global_with_positive_prob"
EXPLOSION_WITH_POSITIVE_PROB = "explosion_with_positive_prob"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class CatalogDrift:
    func: Callable[[np.ndarray], np.ndarray]
    gamma: float
    bound_K: float
    dissipative: bool


def _rational(v):
    return v / (1.0 + v * v)


CATALOG: dict[str, CatalogDrift] = {
    "rational": CatalogDrift(_rational, gamma=0.0, bound_K=1.0, dissipative=True),
}


@dataclass(frozen=True)
class DriftSpec:
    """A drift ``F`` that is either homogeneous of degree ``gamma`` or a named
    bounded drift from :data:`CATALOG`.

    Homogeneous drifts are fully determined by ``F(1) = f_plus`` and
    ``F(-1) = f_minus``: ``F(v) = F(sgn v) |v|**gamma`` with ``sgn(0) = 0``.
    """

    kind: str = "homogeneous"
    f_plus: float = 0.0
    f_minus: float = 0.0
    gamma: float = 1.0
    bound_K: float | None = None
    catalog_id: str | None = None

    def __post_init__(self):
        if self.kind == "homogeneous":
            for name in ("f_plus", "f_minus", "gamma"):
                val = getattr(self, name)
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise SpecError(name, f"expected a real number, got {val!r}")
                if not math.isfinite(val):
                    raise SpecError(name, "must be finite")
            if self.gamma < 0:
                raise SpecError("gamma", "must be >= 0")
            if self.bound_K is None:
                K = max(abs(self.f_plus), abs(self.f_minus))
                object.__setattr__(self, "bound_K", K if K > 0 else 1.0)
        elif self.kind == "bounded-catalog":
            if self.catalog_id not in CATALOG:
                raise SpecError("catalog_id", f"unknown catalog drift {self.catalog_id!r}")
            entry = CATALOG[self.catalog_id]
            object.__setattr__(self, "gamma", entry.gamma)
            if self.bound_K is None:
                object.__setattr__(self, "bound_K", entry.bound_K)
        else:
            raise SpecError("kind", f"expected 'homogeneous' or 'bounded-catalog', got {self.kind!r}")
        if isinstance(self.bound_K, bool) or not isinstance(self.bound_K, (int, float)) or not self.bound_K > 0:
            raise SpecError("bound_K", "must be > 0")
        if self.homogeneous and self.bound_K < max(abs(self.f_plus), abs(self.f_minus)):
            raise SpecError("bound_K", "must dominate |F(1)| and |F(-1)|")

    @classmethod
    def power(cls, rho: float, gamma: float) -> "DriftSpec":
        """``F(v) = rho sgn(v) |v|**gamma``."""
        return cls(f_plus=float(rho), f_minus=-float(rho), gamma=float(gamma))

    @classmethod
    def catalog(cls, name: str) -> "DriftSpec":
        return cls(kind="bounded-catalog", catalog_id=name)

    @property
    def homogeneous(self) -> bool:
        return self.kind == "homogeneous"

    def dissipative(self) -> bool:
        """``v F(v) >= 0`` for every ``v``."""
        if self.homogeneous:
            return self.f_plus >= 0 and self.f_minus <= 0
        return CATALOG[self.catalog_id].dissipative

    def is_zero(self) -> bool:
        return self.homogeneous and self.f_plus == 0 and self.f_minus == 0

    def symmetric(self) -> bool:
        """Odd drift, ``F(-v) = -F(v)``."""
        return self.homogeneous and self.f_minus == -self.f_plus

    def __call__(self, v):
        return eval_drift(self, v)


def eval_drift(drift: DriftSpec, v):
    """Evaluate ``F`` at ``v`` (scalar or array)."""
    if not drift.homogeneous:
        out = CATALOG[drift.catalog_id].func(np.asarray(v, dtype=float))
        return float(out) if np.ndim(out) == 0 else out
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    # 0**0 would give 1; sgn(0) = 0 forces F(0) = 0
    mag = a if drift.gamma == 1.0 else np.where(a > 0, a ** drift.gamma, 0.0)
    out = np.where(v > 0, drift.f_plus, np.where(v < 0, drift.f_minus, 0.0)) * mag
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Regime:
    tag: str
    q: float


@dataclass(frozen=True)
class ModelSpec:
    drift: DriftSpec
    beta: float
    t0: float = 1.0
    v0: float = 1.0
    x0: float = 0.0
    q: float = field(init=False)

    def __post_init__(self):
        for name in ("beta", "t0", "v0", "x0"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise SpecError(name, f"expected a finite real number, got {val!r}")
        if self.t0 <= 0:
            raise SpecError("t0", "must be > 0")
        if self.v0 <= 0:
            raise SpecError("v0", "must be > 0")
        object.__setattr__(self, "q", self.beta / (self.drift.gamma + 1.0))

    @property
    def gamma(self) -> float:
        return self.drift.gamma

    def regime(self, tol: float = REGIME_TOL) -> Regime:
        return classify_regime(self, tol)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self.drift).items()}
        d.update(beta=self.beta, t0=self.t0, v0=self.v0, x0=self.x0)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {"kind", "f_plus", "f_minus", "gamma", "bound_K", "catalog_id",
                 "beta", "t0", "v0", "x0"}
        extra = set(d) - known
        if extra:
            raise SpecError(sorted(extra)[0], "unknown model key")
        kind = d.get("kind", "homogeneous")
        dkw = {"kind": kind}
        if kind == "homogeneous":
            for k in ("f_plus", "f_minus", "gamma"):
                if k in d:
                    dkw[k] = d[k]
        else:
            dkw["catalog_id"] = d.get("catalog_id")
        if d.get("bound_K") is not None:
            dkw["bound_K"] = d["bound_K"]
        if "beta" not in d:
            raise SpecError("beta", "missing")
        kw = {k: d[k] for k in ("beta", "t0", "v0", "x0") if k in d}
        return cls(DriftSpec(**dkw), **kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def classify_regime(spec: ModelSpec, tol: float = REGIME_TOL) -> Regime:
    q = spec.q
    if q > 0.5 + tol:
        tag = SUPER_CRITICAL
    elif q < 0.5 - tol:
        tag = SUB_CRITICAL
    else:
        tag = CRITICAL
    return Regime(tag, q)


def explosion_verdict(spec: ModelSpec) -> str:
    drift = spec.drift
    if drift.gamma <= 1 or drift.dissipative():
        return ALMOST_SURELY_GLOBAL
    if drift.homogeneous and drift.gamma > 1:
        fm, fp = drift.f_minus, drift.f_plus
        if (fm > 0 and fp >= 0) or fp < 0:
            return EXPLOSION_WITH_POSITIVE_PROB
    if 2 * spec.q > 1:
        return GLOBAL_WITH_POSITIVE_PROB
    return UNKNOWN
