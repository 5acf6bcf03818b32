"""Goodness-of-fit, moment and covariance checks used by the verification suites.

Reductions go through numpy's pairwise summation so that results do not
depend on how paths were split across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .integrate import RngPolicy, TimeGrid, simulate_ske
from .model import ModelSpec

KS_COEF = 1.63
MIN_SAMPLES = 100
DEFAULT_MARGIN = 0.01


@dataclass
class TestReport:
    name: str
    statistic: float
    threshold: float
    n: int
    passed: bool = field(init=False)
    metadata: dict = field(default_factory=dict)
    status: str | None = None

    __test__ = False

    def __post_init__(self):
        self.statistic = float(self.statistic)
        self.threshold = float(self.threshold)
        if self.status is None:
            self.passed = bool(self.statistic <= self.threshold)
        else:
            self.passed = False

    def to_dict(self) -> dict:
        d = {"name": self.name, "statistic": self.statistic, "threshold": self.threshold,
             "pass": self.passed, "n": self.n}
        if self.status is not None:
            d["status"] = self.status
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: statistic={self.statistic:.6g} threshold={self.threshold:.6g} (n={self.n})"


def reports_to_csv(reports: Sequence[TestReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "statistic", "threshold", "pass", "n"])
    for r in reports:
        w.writerow([r.name, repr(r.statistic), repr(r.threshold), str(r.passed).lower(), r.n])
    return buf.getvalue()


def _clean(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if len(x) < MIN_SAMPLES:
        raise PreconditionError(f"need at least {MIN_SAMPLES} samples, got {len(x)}")
    return x


def ks_distance(samples, cdf: Callable) -> float:
    x = np.sort(_clean(samples))
    n = len(x)
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_distance(a, b) -> float:
    a, b = np.sort(_clean(a)), np.sort(_clean(b))
    z = np.concatenate([a, b])
    fa = np.searchsorted(a, z, side="right") / len(a)
    fb = np.searchsorted(b, z, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def ks_one_sample(samples, cdf: Callable, name: str = "ks_one_sample",
                  margin: float = 0.0, threshold: float | None = None, **meta) -> TestReport:
    """Sup-distance between the empirical CDF and ``cdf``.

    The default threshold is the asymptotic 1% critical value ``1.63/sqrt(n)``
    plus ``margin``.
    """
    n = len(_clean(samples))
    stat = ks_distance(samples, cdf)
    thr = KS_COEF / math.sqrt(n) + margin if threshold is None else threshold
    return TestReport(name, stat, thr, n, metadata={"margin": margin, **meta})


def ks_two_sample(a, b, name: str = "ks_two_sample", margin: float = 0.0,
                  threshold: float | None = None, **meta) -> TestReport:
    n, m = len(_clean(a)), len(_clean(b))
    stat = ks_two_distance(a, b)
    thr = KS_COEF * math.sqrt((n + m) / (n * m)) + margin if threshold is None else threshold
    return TestReport(name, stat, thr, n + m, metadata={"margin": margin, "n_a": n, "n_b": m, **meta})


def empirical_moment(samples, kappa: float) -> tuple[float, float]:
    """Mean of ``|x|**kappa`` and its CLT standard error."""
    x = np.abs(np.asarray(samples, dtype=float).ravel())
    if kappa == 0:
        return 1.0, 0.0
    y = x ** kappa
    return float(np.mean(y)), float(np.std(y, ddof=1) / math.sqrt(len(y)))


def _cov_with_jackknife(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = len(x)
    if n < MIN_SAMPLES:
        raise PreconditionError(f"need at least {MIN_SAMPLES} valid paths, got {n}")
    xc = x - np.mean(x)
    yc = y - np.mean(y)
    sxy = np.sum(xc * yc)
    cov = float(sxy / (n - 1))
    # leave-one-out covariances in closed form
    sx, sy = np.sum(xc), np.sum(yc)
    mx = (sx - xc) / (n - 1)
    my = (sy - yc) / (n - 1)
    loo = (sxy - xc * yc - (n - 1) * mx * my) / (n - 2)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return cov, se


def empirical_cov(ensemble, s: float, t: float, pair: tuple[str, str] = ("v", "v")) -> tuple[float, float]:
    """Sample covariance across non-exploded paths with a jackknife standard error."""
    valid = ensemble.valid
    xs = ensemble.values(s, pair[0], valid_only=False)[valid]
    ys = ensemble.values(t, pair[1], valid_only=False)[valid]
    return _cov_with_jackknife(xs, ys)


def empirical_corr(ensemble, s: float, t: float, pair: tuple[str, str] = ("v", "v")) -> float:
    c, _ = empirical_cov(ensemble, s, t, pair)
    vs, _ = empirical_cov(ensemble, s, s, (pair[0], pair[0]))
    vt, _ = empirical_cov(ensemble, t, t, (pair[1], pair[1]))
    return c / math.sqrt(vs * vt)


def predicted_moment_exponent(spec: ModelSpec, kappa: float) -> float:
    """Growth exponent of ``E|V_t|^kappa`` bounding the moments for ``spec``."""
    g, beta = spec.gamma, spec.beta
    dissipative = spec.drift.dissipative()
    if not (dissipative or (0 <= kappa <= 1 and g < 1)):
        raise PreconditionError(
            f"moment bound needs a dissipative drift (any kappa >= 0) or kappa in [0,1] with gamma < 1; "
            f"got kappa={kappa}, gamma={g}, dissipative={dissipative}")
    if kappa < 0:
        raise PreconditionError("kappa must be >= 0")
    if dissipative or beta >= (g + 1) / 2:
        return kappa / 2
    return kappa * (1 - beta) / (1 - g)


def log_log_slope(t, m) -> float:
    return float(np.polyfit(np.log(t), np.log(m), 1)[0])


def moment_growth_check(
    spec: ModelSpec,
    kappa: float,
    t_grid: TimeGrid,
    n_paths: int,
    rng: RngPolicy,
    eval_times=None,
    n_eval: int = 13,
    tolerance: float = 0.05,
    threshold: float = 1e12,
    threads: int | None = None,
    name: str | None = None,
) -> TestReport:
    """Regress ``log E|V_t|^kappa`` on ``log t`` over the top decade of
    ``eval_times`` and compare with the predicted exponent.

    ``t_grid`` is the simulation grid; evaluation times default to
    ``n_eval`` log-spaced nodes from ``10 * t0`` to the end of the grid.
    """
    predicted = predicted_moment_exponent(spec, kappa)
    nodes = t_grid.nodes
    if eval_times is None:
        lo = min(10 * spec.t0, nodes[-1] / 10)
        want = np.geomspace(lo, nodes[-1], n_eval)
        eval_times = np.unique(nodes[np.clip(np.searchsorted(nodes, want), 0, len(nodes) - 1)])
    eval_times = np.asarray(eval_times, dtype=float)
    bundle = simulate_ske(spec, t_grid, n_paths, rng, record=eval_times,
                          threshold=threshold, threads=threads)
    top = eval_times[eval_times >= eval_times[-1] / 10 * (1 - 1e-12)]
    moments = np.array([empirical_moment(bundle.values_at(t), kappa)[0] for t in top])
    slope = log_log_slope(top, moments)
    return TestReport(
        name or f"moment_growth(kappa={kappa}, gamma={spec.gamma}, beta={spec.beta})",
        slope - predicted, tolerance, int(bundle.valid.sum()),
        metadata={"slope": slope, "predicted": predicted, "kappa": kappa,
                  "exploded": int(bundle.exploded.sum()), "seed": rng.master_seed,
                  "t_range": [float(top[0]), float(top[-1])]})


def cumulative_trapezoid(y, t) -> np.ndarray:
    y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def gronwall_bound(a, b, r: float, t_grid) -> np.ndarray:
    """``2^(1/(1-r)) [a(t) + ((1-r) int_{t0}^t b)^(1/(1-r))]`` at every node."""
    p = 1.0 / (1.0 - r)
    B = cumulative_trapezoid(b, t_grid)
    return 2.0 ** p * (np.asarray(a, dtype=float) + ((1.0 - r) * B) ** p)


def gronwall_check(a, a_prime, b, r: float, g, t_grid, tol: float = 1e-8,
                   name: str = "gronwall") -> TestReport:
    """Check the conclusion of the Gronwall-type lemma on tabulated functions.

    The premise ``g <= a + int b g^r`` (trapezoid rule, tolerance ``tol``
    relative to the right-hand side) together with ``b > 0``, ``a > 0`` and
    ``a' >= 0`` must hold; otherwise the report carries status
    ``"premise failed"``.
    """
    t = np.asarray(t_grid, dtype=float)
    a, a_prime, b, g = (np.asarray(z, dtype=float) for z in (a, a_prime, b, g))
    if not 0 <= r < 1:
        raise PreconditionError("r must lie in [0, 1)")
    rhs = a + cumulative_trapezoid(b * g ** r, t)
    bound = gronwall_bound(a, b, r, t)
    excess = g - bound
    stat = float(np.max(excess / np.maximum(1.0, np.abs(bound))))
    premise = (np.all(b > 0) and np.all(a > 0) and np.all(a_prime >= 0) and np.all(g >= 0)
               and np.all(g <= rhs + tol * np.maximum(1.0, np.abs(rhs))))
    return TestReport(name, stat, 0.0, len(t),
                      status=None if premise else "premise failed",
                      metadata={"r": r})


def gronwall_equality_solution(a, a_prime, b, r: float, t_grid) -> np.ndarray:
    """Solution of ``g = a + int b g^r`` for the trapezoid-discretized integral.

    Each step solves ``g_k = a_k + I_{k-1} + h/2 (b_{k-1} g_{k-1}^r + b_k g_k^r)``
    for ``g_k`` by Newton iteration; the result satisfies the discrete
    premise with equality up to rounding.
    """
    t = np.asarray(t_grid, dtype=float)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    g = np.empty_like(t)
    g[0] = a[0]
    integral = 0.0
    for k in range(1, len(t)):
        h = t[k] - t[k - 1]
        prev = 0.5 * h * b[k - 1] * g[k - 1] ** r
        c = a[k] + integral + prev
        w = 0.5 * h * b[k]
        x = max(c, g[k - 1])
        for _ in range(60):
            f = x - c - w * x ** r
            df = 1.0 - w * r * x ** (r - 1) if x > 0 else 1.0
            step = f / df
            x = max(x - step, 1e-300)
            if abs(step) <= 1e-15 * x:
                break
        g[k] = x
        integral += prev + w * x ** r
    return g
