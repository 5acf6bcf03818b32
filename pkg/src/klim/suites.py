"""Verification suites run by ``klim verify`` and the acceptance tests.

Each suite takes an :class:`ExperimentConfig` whose defaults
(:func:`default_config`) are the canonical parameters of that suite, and
returns a :class:`SuiteResult` with one :class:`TestReport` per check.
Nothing in a result depends on the worker-thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import PreconditionError, RegimeMismatchError, SpecError
from .integrate import (STREAM_INIT, RngPolicy, TimeGrid, simulate_exponential_homogenized,
                        simulate_power_homogenized, simulate_ske, wilson_interval)
from .invariant import LambdaF, PiF
from .limits import (CriticalLaw, KolmogorovPair, SubcriticalPosition, SubcriticalVelocity, rescale)
from .model import (ALMOST_SURELY_GLOBAL, CRITICAL, EXPLOSION_WITH_POSITIVE_PROB, SUB_CRITICAL,
                    SUPER_CRITICAL, DriftSpec, ModelSpec, classify_regime, explosion_verdict)
from .stats import (DEFAULT_MARGIN, KS_COEF, TestReport, empirical_corr, empirical_cov, gronwall_check,
                    gronwall_equality_solution, ks_one_sample, ks_two_sample, moment_growth_check)
from .timechange import TimeChange, apply_scaling, inverse_scaling, simulate_time_changed

STREAM_DIRECT = 3
STREAM_GRONWALL = 4
STREAM_LAW_BASE = 100

SUITES = ("supercritical", "critical", "subcritical", "moments", "gronwall", "invariant", "timechange")


@dataclass
class SuiteResult:
    suite: str
    regime: str | None
    parameters: dict
    epsilon: float | None
    reports: list[TestReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict:
        return {"regime": self.regime, "parameters": self.parameters, "epsilon": self.epsilon,
                "tests": [r.to_dict() for r in self.reports]}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)

    def report(self, name: str) -> TestReport:
        for r in self.reports:
            if r.name == name:
                return r
        raise KeyError(name)


def _linear(beta: float, **kw) -> ModelSpec:
    return ModelSpec(DriftSpec.power(1.0, 1.0), beta, **kw)


def default_config(suite: str) -> ExperimentConfig:
    if suite == "supercritical":
        return ExperimentConfig(_linear(2.0), epsilon=1e-2, t_eval=(1.0,))
    if suite == "critical":
        return ExperimentConfig(_linear(1.0), epsilon=1e-2, t_eval=(1.0, 4.0))
    if suite == "subcritical":
        return ExperimentConfig(_linear(0.5), epsilon=1e-3, t_eval=(1.0, 2.0))
    if suite == "timechange":
        return ExperimentConfig(_linear(1.0))
    if suite == "moments":
        return ExperimentConfig(_linear(1.0), n_steps=4000, t_eval=(1e4,), grid="log")
    if suite in ("gronwall", "invariant"):
        return ExperimentConfig(_linear(1.0))
    if suite == "explosion":
        spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=0.0, gamma=3.0), 0.0, v0=5.0)
        return ExperimentConfig(spec, t_eval=(2.0,), n_steps=10_000)
    raise SpecError("suite", f"unknown suite {suite!r}")


def _require_regime(suite: str, spec: ModelSpec, tag: str):
    reg = classify_regime(spec)
    if reg.tag != tag:
        raise RegimeMismatchError(suite, reg.q, reg.tag)


def _params(cfg: ExperimentConfig, **extra) -> dict:
    d = {"model": cfg.model.to_dict(), "q": cfg.model.q, "n_paths": cfg.n_paths,
         "n_steps": cfg.n_steps, "seed": cfg.seed, "t_eval": list(cfg.t_eval)}
    if cfg.margin is not None:
        d["margin"] = cfg.margin
    d.update(extra)
    return d


def _ks_threshold(n: int, fixed: float | None, margin: float | None, default_margin: float = DEFAULT_MARGIN):
    """Fixed threshold unless a margin override is given; returns ``(threshold, margin)``."""
    base = KS_COEF / math.sqrt(n)
    if margin is not None or fixed is None:
        m = default_margin if margin is None else margin
        return base + m, m
    return fixed, fixed - base


def _ks_two_threshold(n: int, m: int, fixed: float, margin: float | None):
    base = KS_COEF * math.sqrt((n + m) / (n * m))
    if margin is not None:
        return base + margin, margin
    return fixed, fixed - base


def _bracket(grid: TimeGrid, times) -> np.ndarray:
    """Grid nodes equal to, or immediately around, each requested time."""
    nodes = grid.nodes
    out = []
    for t in np.atleast_1d(times):
        i = int(np.searchsorted(nodes, t))
        if i < len(nodes) and abs(nodes[i] - t) <= 1e-9 * max(1.0, abs(t)):
            out.append(nodes[i])
        elif i > 0 and abs(nodes[i - 1] - t) <= 1e-9 * max(1.0, abs(t)):
            out.append(nodes[i - 1])
        else:
            out.extend(nodes[max(i - 1, 0):i + 1])
    return np.unique(out)


def _explosion_report(bundle, name: str = "no_exploded_paths") -> TestReport:
    k = int(bundle.exploded.sum())
    return TestReport(name, k, 0, bundle.n_paths,
                      metadata={"exploded_fraction": bundle.explosion_fraction})


def _rel_err(value: float, target: float) -> float:
    return abs(value / target - 1.0)


def _check_eval_window(cfg: ExperimentConfig):
    for t in cfg.t_eval:
        if t / cfg.epsilon < cfg.model.t0:
            raise SpecError("t_eval", f"t/eps = {t / cfg.epsilon:g} precedes t0 = {cfg.model.t0:g}")


# --- regime suites -------------------------------------------------------------


def run_supercritical(cfg: ExperimentConfig | None = None, threads: int | None = None) -> SuiteResult:
    """Rescaled pair ``(sqrt(eps) V_{t/eps}, eps^{3/2} X_{t/eps})`` against ``(B, int B)``."""
    cfg = cfg or default_config("supercritical")
    spec = cfg.model
    _require_regime("supercritical", spec, SUPER_CRITICAL)
    _check_eval_window(cfg)
    eps = cfg.epsilon
    horizon = max(cfg.t_eval) / eps
    n_steps = cfg.n_steps or math.ceil((horizon - spec.t0) / (1e-3 * horizon) - 1e-9)
    grid = TimeGrid.uniform(spec.t0, horizon, n_steps)
    targets = np.array(cfg.t_eval) / eps
    bundle = simulate_ske(spec, grid, cfg.n_paths, RngPolicy(cfg.seed), record=_bracket(grid, targets),
                          threads=threads)
    ens = rescale(bundle, eps, 0.5, 1.5, np.array(cfg.t_eval))
    law = KolmogorovPair()
    reports = []
    for t in cfg.t_eval:
        v = ens.values(t, "v")
        thr, m = _ks_threshold(len(v), None, cfg.margin)
        reports.append(ks_one_sample(v, law.marginal(t, "v").cdf, f"ks_velocity(t={t:g})", margin=m,
                                     threshold=thr))
        var_x, se_x = empirical_cov(ens, t, t, ("x", "x"))
        reports.append(TestReport(f"var_position(t={t:g})", _rel_err(var_x, law.cov_xx(t, t)), 0.05, len(v),
                                  metadata={"value": var_x, "se": se_x, "target": law.cov_xx(t, t)}))
        cov_vx, se_vx = empirical_cov(ens, t, t, ("v", "x"))
        target = law.cov_vx(t, t)
        reports.append(TestReport(f"cov_velocity_position(t={t:g})", _rel_err(cov_vx, target), 0.10, len(v),
                                  metadata={"value": cov_vx, "se": se_vx, "target": target}))
    reports.append(_explosion_report(bundle))
    return SuiteResult("supercritical", SUPER_CRITICAL, _params(cfg, n_steps=n_steps), eps, reports)


def critical_s_grid(t_eval, eps: float, t0: float, ds: float = 1e-3, n_steps: int | None = None) -> TimeGrid:
    """Uniform grid on ``[0, max s_k]`` with the nodes ``s_k = log(t_k / (eps t0))`` inserted."""
    s_k = np.log(np.asarray(t_eval, dtype=float) / (eps * t0))
    s_max = float(s_k.max())
    n = n_steps or math.ceil(s_max / ds - 1e-9)
    base = np.linspace(0.0, s_max, n + 1)
    keep = np.all(np.abs(base[:, None] - s_k[None, :]) > 1e-9, axis=1)
    return TimeGrid.from_nodes(np.union1d(base[keep], s_k))


def run_critical(cfg: ExperimentConfig | None = None, threads: int | None = None) -> SuiteResult:
    """Stationary homogenized process mapped back through ``t = t0 e^s`` and rescaled."""
    cfg = cfg or default_config("critical")
    spec = cfg.model
    _require_regime("critical", spec, CRITICAL)
    _check_eval_window(cfg)
    eps, rng = cfg.epsilon, RngPolicy(cfg.seed)
    law = CriticalLaw(spec.drift)
    h0 = law.invariant.sample(cfg.n_paths, rng, stream=STREAM_INIT)
    s_grid = critical_s_grid(cfg.t_eval, eps, spec.t0, n_steps=cfg.n_steps)
    s_k = np.log(np.array(cfg.t_eval) / (eps * spec.t0))
    hom = simulate_exponential_homogenized(spec, s_grid, cfg.n_paths, rng, h0, record=s_k, threads=threads)
    tc = TimeChange.exponential(spec.t0)
    v_bundle = inverse_scaling(hom, tc, np.array(cfg.t_eval) / eps)
    ens = rescale(v_bundle, eps, 0.5, 1.5, np.array(cfg.t_eval))
    var_inv = law.invariant.variance()
    reports = []
    for t in cfg.t_eval:
        v = ens.values(t, "v")
        thr, m = _ks_threshold(len(v), None, cfg.margin)
        reports.append(ks_one_sample(v, law.marginal(t).cdf, f"ks_velocity(t={t:g})", margin=m, threshold=thr))
        var, se = empirical_cov(ens, t, t)
        reports.append(TestReport(f"var_velocity(t={t:g})", _rel_err(var, t * var_inv), 0.05, len(v),
                                  metadata={"value": var, "se": se, "target": t * var_inv}))
    if law.gaussian:
        ts = cfg.t_eval
        for i, s in enumerate(ts):
            for t in ts[i + 1:]:
                c, se = empirical_cov(ens, s, t)
                target = law.cov(s, t)
                reports.append(TestReport(f"cov_velocity(s={s:g},t={t:g})", _rel_err(c, target), 0.10,
                                          int(ens.valid.sum()),
                                          metadata={"value": c, "se": se, "target": target}))
    reports.append(_explosion_report(hom))
    return SuiteResult("critical", CRITICAL, _params(cfg, n_steps=s_grid.n_steps), eps, reports)


SUBCRITICAL_KS = 0.03


def run_subcritical(cfg: ExperimentConfig | None = None, threads: int | None = None) -> SuiteResult:
    """Rescaled velocity against ``t^q PiF`` and position against the Gaussian kernel ``K``."""
    cfg = cfg or default_config("subcritical")
    spec = cfg.model
    _require_regime("subcritical", spec, SUB_CRITICAL)
    _check_eval_window(cfg)
    drift = spec.drift
    if not (drift.symmetric() and drift.f_plus > 0 and drift.gamma >= 1):
        raise SpecError("f_plus", "sub-critical suite needs F = rho sgn(v)|v|^gamma with rho > 0, gamma >= 1")
    eps, q, beta = cfg.epsilon, spec.q, spec.beta
    rho = drift.f_plus
    horizon = max(cfg.t_eval) / eps
    n_steps = cfg.n_steps or math.ceil((horizon - spec.t0) / 0.1 - 1e-9)
    grid = TimeGrid.uniform(spec.t0, horizon, n_steps)
    targets = np.array(cfg.t_eval) / eps
    bundle = simulate_ske(spec, grid, cfg.n_paths, RngPolicy(cfg.seed), record=_bracket(grid, targets),
                          threads=threads)
    ens = rescale(bundle, eps, q, beta + 0.5, np.array(cfg.t_eval))
    vlaw = SubcriticalVelocity(rho, drift.gamma, q)
    xlaw = SubcriticalPosition(rho, beta)
    reports = []
    for t in cfg.t_eval:
        v = ens.values(t, "v")
        thr, m = _ks_threshold(len(v), SUBCRITICAL_KS, cfg.margin)
        reports.append(ks_one_sample(v, vlaw.marginal(t).cdf, f"ks_velocity(t={t:g})", margin=m, threshold=thr))
    ts = cfg.t_eval
    for i, s in enumerate(ts):
        for t in ts[i + 1:]:
            r = empirical_corr(ens, s, t)
            reports.append(TestReport(f"corr_velocity(s={s:g},t={t:g})", abs(r), 0.05, int(ens.valid.sum()),
                                      metadata={"value": r}))
    t = ts[0]
    var_x, se = empirical_cov(ens, t, t, ("x", "x"))
    target = xlaw.cov(t, t)
    reports.append(TestReport(f"var_position(t={t:g})", _rel_err(var_x, target), 0.05, int(ens.valid.sum()),
                              metadata={"value": var_x, "se": se, "target": target}))
    reports.append(_explosion_report(bundle))
    return SuiteResult("subcritical", SUB_CRITICAL, _params(cfg, n_steps=n_steps), eps, reports)


# --- change of time ------------------------------------------------------------

TIMECHANGE_KS = 0.035
ROUND_TRIP_TOL = 1e-12
ROUND_TRIP_PATHS = 256


def _timechange_s_end(tc: TimeChange) -> float:
    if tc.kind == "exponential":
        return 3.0
    return 6.0 if math.isinf(tc.t1) else 0.5 * tc.t1


def _timechange_case(spec: ModelSpec, cfg: ExperimentConfig, threads):
    tc = TimeChange.for_model(spec)
    s_end = _timechange_s_end(tc)
    n = cfg.n_steps or math.ceil(s_end / 1e-3 - 1e-9)
    s_grid = TimeGrid.uniform(0.0, s_end, n)
    t_grid = TimeGrid.from_nodes(tc.phi(s_grid.nodes))
    rng = RngPolicy(cfg.seed)
    tag = f"{tc.kind}, q={spec.q:g}"

    bundle = simulate_ske(spec, t_grid, cfg.n_paths, rng, record=[t_grid.t_end], threads=threads)
    mapped = apply_scaling(bundle, tc, [s_end]).v[:, 0]
    direct = simulate_time_changed(spec, tc, s_grid, cfg.n_paths, rng, record=[s_end],
                                   threads=threads, stream=STREAM_DIRECT)
    a = mapped[bundle.valid]
    b = direct.values_at(s_end)
    thr, m = _ks_two_threshold(len(a), len(b), TIMECHANGE_KS, cfg.margin)
    reports = [ks_two_sample(a, b, f"ks_two_sample({tag}, s={s_end:g})", margin=m, threshold=thr)]

    # path-level round trip on grids aligned with the simulation nodes
    k = min(ROUND_TRIP_PATHS, cfg.n_paths)
    small = simulate_ske(spec, t_grid, k, rng, threads=threads)
    back = inverse_scaling(apply_scaling(small, tc, s_grid), tc, t_grid)
    err = max(float(np.nanmax(np.abs(back.v - small.v))), float(np.nanmax(np.abs(back.x - small.x))))
    reports.append(TestReport(f"round_trip({tag})", err, ROUND_TRIP_TOL, k))
    return reports, {"model": spec.to_dict(), "kind": tc.kind, "q": spec.q, "s_end": s_end, "n_steps": n}


def run_timechange(cfg: ExperimentConfig | None = None, threads: int | None = None,
                   companion: bool = True) -> SuiteResult:
    """Scaled SKE paths against the directly simulated transformed process.

    With ``companion`` the sub-critical linear model with ``q = 1/4`` is run
    alongside ``cfg.model``.
    """
    cfg = cfg or default_config("timechange")
    models = [cfg.model]
    if companion:
        models.append(_linear(0.5, t0=cfg.model.t0, v0=cfg.model.v0, x0=cfg.model.x0))
    reports, cases = [], []
    for spec in models:
        r, meta = _timechange_case(spec, cfg, threads)
        reports += r
        cases.append(meta)
    params = {"cases": cases, "n_paths": cfg.n_paths, "seed": cfg.seed}
    if cfg.margin is not None:
        params["margin"] = cfg.margin
    return SuiteResult("timechange", classify_regime(cfg.model).tag, params, None, reports)


# --- moments -------------------------------------------------------------------


def moment_configs() -> list[tuple[str, ModelSpec, float]]:
    """The three canonical growth checks: Brownian, dissipative linear, and anti-dissipative gamma = 1/2."""
    return [
        ("brownian", ModelSpec(DriftSpec(f_plus=0.0, f_minus=0.0, gamma=1.0), 0.0), 2.0),
        ("linear_dissipative", _linear(1.0), 2.0),
        ("sublinear_repulsive", ModelSpec(DriftSpec(f_plus=-1.0, f_minus=1.0, gamma=0.5), 0.0), 1.0),
    ]


def run_moments(cfg: ExperimentConfig | None = None, threads: int | None = None,
                companion: bool = True) -> SuiteResult:
    """Log-log growth of ``E|V_t|^kappa`` on a logarithmic grid up to ``max(t_eval)``."""
    cfg = cfg or default_config("moments")
    t_end = max(cfg.t_eval)
    n_steps = cfg.n_steps or 4000
    if companion:
        cases = moment_configs()
    else:
        spec = cfg.model
        kappas = [1.0, 2.0] if spec.drift.dissipative() else [1.0]
        cases = [("custom", spec, k) for k in kappas]
    reports, meta = [], []
    for label, spec, kappa in cases:
        if t_end <= 10 * spec.t0:
            raise SpecError("t_eval", "moment growth needs max(t_eval) > 10 t0")
        grid = TimeGrid.logarithmic(spec.t0, t_end, n_steps)
        eval_times = _bracket(grid, np.geomspace(10 * spec.t0, t_end, 13))
        rep = moment_growth_check(spec, kappa, grid, cfg.n_paths, RngPolicy(cfg.seed), eval_times=eval_times,
                                  threads=threads, name=f"moment_growth({label}, kappa={kappa:g})")
        reports.append(rep)
        meta.append({"label": label, "model": spec.to_dict(), "kappa": kappa})
    params = {"cases": meta, "n_paths": cfg.n_paths, "n_steps": n_steps, "t_end": t_end, "seed": cfg.seed}
    return SuiteResult("moments", None, params, None, reports)


# --- Gronwall ------------------------------------------------------------------


def gronwall_instance(rng: np.random.Generator, n_nodes: int = 2001):
    """Random ``(a, a', b, r, t)`` with increasing ``a > 0`` and piecewise-linear ``b > 0``."""
    t0 = 1.0
    t = np.linspace(t0, t0 + rng.uniform(1.0, 10.0), n_nodes)
    r = rng.uniform(0.0, 0.9)
    knots = np.linspace(t[0], t[-1], 6)
    b = np.interp(t, knots, rng.uniform(0.1, 3.0, size=6))
    a0, c, d = rng.uniform(0.1, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.2)
    a = a0 + c * (t - t0) + d * (t - t0) ** 2
    a_prime = c + 2 * d * (t - t0)
    return a, a_prime, b, r, t


def run_gronwall(cfg: ExperimentConfig | None = None, threads: int | None = None,
                 n_instances: int = 100) -> SuiteResult:
    """Bound check on random instances whose ``g`` solves the equality case."""
    cfg = cfg or default_config("gronwall")
    rng = RngPolicy(cfg.seed)
    bound_fail, premise_fail, worst = 0, 0, -math.inf
    for i in range(n_instances):
        a, ap, b, r, t = gronwall_instance(rng.generator(i, STREAM_GRONWALL))
        g = gronwall_equality_solution(a, ap, b, r, t)
        rep = gronwall_check(a, ap, b, r, g, t)
        if rep.status is not None:
            premise_fail += 1
        elif not rep.passed:
            bound_fail += 1
        worst = max(worst, rep.statistic)
    reports = [
        TestReport("gronwall_bound_failures", bound_fail, 0, n_instances, metadata={"max_scaled_excess": worst}),
        TestReport("gronwall_premise_failures", premise_fail, 0, n_instances),
    ]
    return SuiteResult("gronwall", None, {"n_instances": n_instances, "seed": cfg.seed}, None, reports)


# --- invariant laws ------------------------------------------------------------

SAMPLER_KS = 0.006
CLOSURE_KS = 0.02
CLOSURE_TIMES = (1.0, 2.5, 5.0)


def invariant_laws():
    return [
        ("LambdaF(gamma=1)", LambdaF(DriftSpec.power(1.0, 1.0))),
        ("LambdaF(gamma=2)", LambdaF(DriftSpec.power(1.0, 2.0))),
        ("PiF(gamma=1,rho=1)", PiF(1.0, 1.0)),
        ("PiF(gamma=1,rho=2)", PiF(2.0, 1.0)),
        ("PiF(gamma=2,rho=1)", PiF(1.0, 2.0)),
        ("PiF(gamma=2,rho=2)", PiF(2.0, 2.0)),
    ]


def run_invariant(cfg: ExperimentConfig | None = None, threads: int | None = None) -> SuiteResult:
    """Sampler/CDF agreement (``10 * n_paths`` draws) and stationarity of the homogenized SDEs."""
    cfg = cfg or default_config("invariant")
    rng = RngPolicy(cfg.seed)
    n_samples = 10 * cfg.n_paths
    reports = []
    for j, (name, law) in enumerate(invariant_laws()):
        # one stream per law, so laws differing only by scale get independent draws
        x = law.sample(n_samples, rng, stream=STREAM_LAW_BASE + j)
        thr, m = _ks_threshold(len(x), SAMPLER_KS, cfg.margin)
        reports.append(ks_one_sample(x, law.cdf, f"sampler_ks({name})", margin=m, threshold=thr))

    s_end = max(CLOSURE_TIMES)
    s_grid = TimeGrid.uniform(0.0, s_end, cfg.n_steps or math.ceil(s_end / 1e-3))
    cases = []
    for g in (1.0, 2.0):
        spec = ModelSpec(DriftSpec.power(1.0, g), (g + 1) / 2)
        cases.append((f"exponential(gamma={g:g})", LambdaF(spec.drift),
                      lambda h0, spec=spec: simulate_exponential_homogenized(
                          spec, s_grid, cfg.n_paths, rng, h0, record=CLOSURE_TIMES, threads=threads)))
        drift = DriftSpec.power(1.0, g)
        cases.append((f"power(gamma={g:g},rho=1)", PiF(1.0, g),
                      lambda h0, drift=drift: simulate_power_homogenized(
                          drift, s_grid, cfg.n_paths, rng, h0, record=CLOSURE_TIMES, threads=threads)))
    for name, law, sim in cases:
        bundle = sim(law.sample(cfg.n_paths, rng, stream=STREAM_INIT))
        for s in CLOSURE_TIMES:
            h = bundle.values_at(s)
            thr, m = _ks_threshold(len(h), CLOSURE_KS, cfg.margin)
            reports.append(ks_one_sample(h, law.cdf, f"stationarity_ks({name}, s={s:g})", margin=m,
                                         threshold=thr))
    params = {"n_samples": n_samples, "n_paths": cfg.n_paths, "n_steps": s_grid.n_steps, "seed": cfg.seed}
    return SuiteResult("invariant", None, params, None, reports)


# --- explosion -----------------------------------------------------------------


def run_explosion(cfg: ExperimentConfig | None = None, threads: int | None = None) -> SuiteResult:
    """Exploded fraction by time ``max(t_eval)`` under vanilla Euler, with a Wilson interval.

    The fraction is asserted positive when explosion has positive probability
    and zero when solutions are almost surely global; otherwise it is only
    reported.
    """
    cfg = cfg or default_config("explosion")
    spec = cfg.model
    T = max(cfg.t_eval)
    if T <= spec.t0:
        raise SpecError("t_eval", "explosion horizon max(t_eval) must exceed t0")
    verdict = explosion_verdict(spec)
    n_steps = cfg.n_steps or 10_000
    grid = TimeGrid.uniform(spec.t0, T, n_steps)
    bundle = simulate_ske(spec, grid, cfg.n_paths, RngPolicy(cfg.seed), scheme="euler", record=[T],
                          threads=threads, allow_all_exploded=True)
    k, n = int(bundle.exploded.sum()), bundle.n_paths
    lo, hi = wilson_interval(k, n)
    meta = {"exploded": k, "fraction": k / n, "wilson_95": [lo, hi], "verdict": verdict}
    if verdict == EXPLOSION_WITH_POSITIVE_PROB:
        # statistic is minus the exploded count: passes iff at least one path exploded,
        # which is exactly when the Wilson lower bound is positive
        rep = TestReport("explosion_detected", -k, -1, n, metadata=meta)
    elif verdict == ALMOST_SURELY_GLOBAL:
        rep = TestReport("no_exploded_paths", k, 0, n, metadata=meta)
    else:
        rep = TestReport("explosion_fraction_reported", k / n, 1.0, n, metadata=meta)
    params = _params(cfg, n_steps=n_steps, horizon=T, scheme="euler", threshold=bundle.threshold)
    return SuiteResult("explosion", classify_regime(spec).tag, params, None, [rep])


RUNNERS = {
    "supercritical": run_supercritical,
    "critical": run_critical,
    "subcritical": run_subcritical,
    "timechange": run_timechange,
    "moments": run_moments,
    "gronwall": run_gronwall,
    "invariant": run_invariant,
    "explosion": run_explosion,
}


def run_suite(name: str, cfg: ExperimentConfig | None = None, threads: int | None = None, **kw) -> SuiteResult:
    if name not in RUNNERS:
        raise PreconditionError(f"unknown suite {name!r}")
    return RUNNERS[name](cfg, threads=threads, **kw)
