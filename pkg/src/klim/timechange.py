"""Exponential and power changes of time and the path scaling they induce.

A time change ``phi`` maps ``[0, t1)`` onto ``[t0, inf)`` and acts on a path
by ``Phi(w)(s) = w(phi(s)) / sqrt(phi'(s))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .integrate import (DEFAULT_THRESHOLD, PathBundle, RngPolicy, TimeGrid,
                        _fast_force, default_scheme, run_paths)
from .model import REGIME_TOL, ModelSpec

SNAP_RTOL = 1e-12


@dataclass(frozen=True)
class TimeChange:
    kind: str
    t0: float
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("exponential", "power"):
            raise PreconditionError(f"unknown time change {self.kind!r}")
        if not self.t0 > 0:
            raise PreconditionError("t0 must be > 0")

    @classmethod
    def exponential(cls, t0: float) -> "TimeChange":
        return cls("exponential", float(t0), 0.5)

    @classmethod
    def power(cls, t0: float, q: float) -> "TimeChange":
        # the closed form is singular at 2q = 1
        if abs(q - 0.5) <= REGIME_TOL:
            return cls.exponential(t0)
        return cls("power", float(t0), float(q))

    @classmethod
    def for_model(cls, spec: ModelSpec) -> "TimeChange":
        return cls.power(spec.t0, spec.q)

    @property
    def _p(self) -> float:
        return 1.0 - 2.0 * self.q

    @property
    def t1(self) -> float:
        if self.kind == "exponential" or self._p > 0:
            return math.inf
        return self.t0 ** self._p / (2 * self.q - 1)

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s >= self.t1):
            raise DomainError(f"s must lie in [0, t1) with t1={self.t1}")
        return s

    def phi(self, s):
        s = self._check_s(s)
        if self.kind == "exponential":
            out = self.t0 * np.exp(s)
        else:
            out = (self.t0 ** self._p + self._p * s) ** (1.0 / self._p)
        return _scalar(out)

    def phi_prime(self, s):
        """``phi' = phi**(2q)`` (``= phi`` in the exponential case)."""
        ph = np.asarray(self.phi(s))
        return _scalar(ph if self.kind == "exponential" else ph ** (2 * self.q))

    def log_phi_ratio(self, s):
        """``phi''/phi'``: 1 for the exponential change, ``2q phi**(2q-1)`` otherwise."""
        ph = np.asarray(self.phi(s))
        if self.kind == "exponential":
            return _scalar(np.ones_like(ph))
        return _scalar(2 * self.q * ph ** (2 * self.q - 1))

    def phi_inverse(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 * (1 - SNAP_RTOL)):
            raise DomainError(f"t must be >= t0={self.t0}")
        t = np.maximum(t, self.t0)
        if self.kind == "exponential":
            out = np.log(t / self.t0)
        else:
            out = (t ** self._p - self.t0 ** self._p) / self._p
        return _scalar(out)

    def gap(self, s: float, t: float, eps: float) -> float:
        """``phi^{-1}(t/eps) - phi^{-1}(s/eps)`` in closed form.

        For the power change this is ``(t^p - s^p) / (p eps^p)`` with
        ``p = 1 - 2q``; it grows without bound as ``eps -> 0`` when ``p > 0``.
        """
        if self.kind == "exponential":
            return math.log(t / s)
        return (t ** self._p - s ** self._p) / (self._p * eps ** self._p)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def _sample_at(t_src: np.ndarray, values: np.ndarray, t_query: np.ndarray) -> np.ndarray:
    """Column-wise linear interpolation; queries within ``SNAP_RTOL`` of a node
    take the node value exactly."""
    t_query = np.asarray(t_query, dtype=float)
    lo, hi = t_src[0], t_src[-1]
    tol = SNAP_RTOL * max(abs(lo), abs(hi), 1.0)
    if np.any(t_query < lo - tol) or np.any(t_query > hi + tol):
        raise DomainError(f"query times leave the simulated window [{lo}, {hi}]")
    idx = np.clip(np.searchsorted(t_src, t_query), 1, len(t_src) - 1)
    left, right = t_src[idx - 1], t_src[idx]
    w = np.clip((t_query - left) / (right - left), 0.0, 1.0)
    w = np.where(np.abs(t_query - left) <= tol, 0.0, w)
    w = np.where(np.abs(t_query - right) <= tol, 1.0, w)
    a, b = values[:, idx - 1], values[:, idx]
    out = np.where(w == 0.0, a, np.where(w == 1.0, b, a + (b - a) * w))
    return out


def apply_scaling(bundle: PathBundle, tc: TimeChange, s_grid) -> PathBundle:
    """Image of every path under ``Phi``, evaluated on ``s_grid``.

    Both rows (velocity and position) are transformed component-wise.
    """
    s = np.asarray(getattr(s_grid, "nodes", s_grid), dtype=float)
    t = np.asarray(tc.phi(s))
    scale = 1.0 / np.sqrt(np.asarray(tc.phi_prime(s)))
    v = _sample_at(bundle.t, bundle.v, t) * scale
    x = _sample_at(bundle.t, bundle.x, t) * scale
    return PathBundle(s.copy(), v, x, bundle.exploded.copy(), bundle.explosion_index.copy(),
                      grid=None, threshold=bundle.threshold)


def inverse_scaling(bundle: PathBundle, tc: TimeChange, t_grid) -> PathBundle:
    """``w(t) = sqrt(phi'(phi^{-1}(t))) * w~(phi^{-1}(t))`` on ``t_grid``."""
    t = np.asarray(getattr(t_grid, "nodes", t_grid), dtype=float)
    s = np.asarray(tc.phi_inverse(t))
    if tc.t1 < math.inf and np.any(s >= tc.t1):
        raise DomainError(f"t maps beyond t1={tc.t1}")
    scale = np.sqrt(np.asarray(tc.phi_prime(s)))
    v = _sample_at(bundle.t, bundle.v, s) * scale
    x = _sample_at(bundle.t, bundle.x, s) * scale
    return PathBundle(t.copy(), v, x, bundle.exploded.copy(), bundle.explosion_index.copy(),
                      grid=None, threshold=bundle.threshold)


def simulate_time_changed(
    spec: ModelSpec,
    tc: TimeChange,
    s_grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    scheme: str | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    **kw,
) -> PathBundle:
    """Direct simulation of the transformed velocity ``V^(phi)``:

        dU = dW - sqrt(phi')/phi**beta F(sqrt(phi') U) ds - (phi''/phi') U/2 ds,
        U_0 = v0 / sqrt(phi'(0)).

    For the power change with homogeneous ``F`` the first drift term reduces
    to ``phi**(-gamma q) F(sqrt(phi') U)``.  The explosion threshold applies
    to ``U``.
    """
    if not math.isclose(tc.t0, spec.t0, rel_tol=1e-12):
        raise PreconditionError("time change and model disagree on t0")
    if s_grid.t_end >= tc.t1:
        raise DomainError(f"s grid reaches beyond t1={tc.t1}")
    force = _fast_force(spec.drift)
    beta = spec.beta

    def b(s, u):
        ph = tc.phi(s)
        dph = tc.phi_prime(s)
        root = math.sqrt(dph)
        return -(root / ph ** beta) * force(root * u) - 0.5 * tc.log_phi_ratio(s) * u

    u0 = spec.v0 / math.sqrt(tc.phi_prime(0.0))
    return run_paths(b, s_grid, n_paths, rng, u0, 0.0,
                     scheme or default_scheme(spec.drift), threshold=threshold, **kw)
