"""Invariant laws of the homogenized velocity equations.

``LambdaF`` is the stationary law of ``dH = dW - H/2 ds - F(H) ds`` and
``PiF`` that of ``dH = dW - rho sgn(H)|H|**gamma ds``.  Both are handled as
unnormalized log-densities with quadrature-backed normalization and CDF.
"""

from __future__ import annotations

import math
import threading
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .errors import PreconditionError, QuadratureError, UnsupportedError
from .integrate import STREAM_SAMPLES, RngPolicy
from .model import DriftSpec, eval_drift

TAIL_DROP = 60.0
SAMPLE_BLOCK = 4096
_GL_ORDER = 20
_PANELS = 2000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


class DensitySpec:
    """One-dimensional law with density proportional to ``exp(log_unnormalized)``.

    Normalization and the CDF table are computed on first use, once.
    """

    def __init__(self, log_unnormalized: Callable[[np.ndarray], np.ndarray], name: str = "density"):
        self.log_unnormalized = log_unnormalized
        self.name = name
        self._lock = threading.Lock()
        self._ready = False

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    def _init(self):
        if self._ready:
            return
        with self._lock:
            if not self._ready:
                self._build()
                self._ready = True

    def _mode(self) -> float:
        f = self.log_unnormalized
        grid = np.concatenate([-np.geomspace(1e3, 1e-3, 300), [0.0], np.geomspace(1e-3, 1e3, 300)])
        with np.errstate(all="ignore"):
            vals = np.asarray(f(grid), dtype=float)
        vals = np.where(np.isfinite(vals), vals, -np.inf)
        i = int(np.argmax(vals))
        if i in (0, len(grid) - 1):
            raise QuadratureError(f"{self.name}: log-density does not decay, cannot normalize")
        res = optimize.minimize_scalar(lambda x: -float(f(np.array(x))),
                                       bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                       options={"xatol": 1e-12})
        return float(res.x) if -res.fun >= vals[i] else float(grid[i])

    def _edge(self, mode: float, peak: float, direction: float) -> float:
        f = self.log_unnormalized
        d = 1.0
        while d < 1e6:
            x = mode + direction * d
            if float(f(np.array(x))) < peak - TAIL_DROP:
                return x
            d *= 2.0
        raise QuadratureError(f"{self.name}: tail does not decay within |x| < 1e6")

    def _build(self):
        f = self.log_unnormalized
        mode = self._mode()
        peak = float(f(np.array(mode)))
        lo, hi = self._edge(mode, peak, -1.0), self._edge(mode, peak, 1.0)
        self._mode_x, self._peak, self._lo, self._hi = mode, peak, lo, hi

        def dens(x):
            return math.exp(float(f(np.array(x))) - peak)

        cuts = sorted({lo, hi, mode, *([0.0] if lo < 0.0 < hi else [])})
        total, err = 0.0, 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, e = integrate.quad(dens, a, b, epsabs=0.0, epsrel=1e-13, limit=500)
            total += val
            err += e
        if not (total > 0 and err <= 1e-10 * total):
            raise QuadratureError(f"{self.name}: quadrature did not converge (err={err:g})")
        self._mass = total

        # panel table for the CDF; panel edges include every cut point
        n_each = np.maximum(1, np.round(_PANELS * np.diff(cuts) / (hi - lo)).astype(int))
        edges = np.unique(np.concatenate(
            [np.linspace(a, b, n + 1) for a, b, n in zip(cuts[:-1], cuts[1:], n_each)]))
        self._edges = edges
        self._cum = np.concatenate([[0.0], np.cumsum(self._panel_mass(edges[:-1], edges[1:]))])

    def _density_rel(self, x):
        with np.errstate(under="ignore"):
            return np.exp(self.log_unnormalized(x) - self._peak)

    def _panel_mass(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        nodes = (a + b)[..., None] * 0.5 + half[..., None] * _GL_X
        return half * (self._density_rel(nodes) @ _GL_W)

    @property
    def Z(self) -> float:
        return normalize(self)

    @property
    def support(self) -> tuple[float, float]:
        self._init()
        return self._lo, self._hi

    def pdf(self, x):
        self._init()
        return self._density_rel(np.asarray(x, dtype=float)) / self._mass

    def cdf(self, x):
        self._init()
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self._lo, self._hi)
        k = np.clip(np.searchsorted(self._edges, xc, side="right") - 1, 0, len(self._edges) - 2)
        left = self._edges[k]
        partial = np.where(xc > left, self._panel_mass(left, xc), 0.0)
        out = np.clip((self._cum[k] + partial) / self._cum[-1], 0.0, 1.0)
        out = np.where(x <= self._lo, 0.0, np.where(x >= self._hi, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def quantile(self, p: float) -> float:
        self._init()
        if not 0.0 < p < 1.0:
            raise PreconditionError("p must lie in (0, 1)")
        return optimize.brentq(lambda x: self.cdf(x) - p, self._lo, self._hi, xtol=1e-10, rtol=1e-14)

    def moment(self, k: float, central: bool = False) -> float:
        """``E[X**k]`` (or central moment) by adaptive quadrature."""
        self._init()
        mu = self.mean() if central else 0.0
        val, _ = integrate.quad(lambda x: (x - mu) ** k * float(self._density_rel(np.array(x))),
                                self._lo, self._hi, points=[self._mode_x], epsabs=0, epsrel=1e-12, limit=500)
        return val / self._mass

    def mean(self) -> float:
        self._init()
        val, _ = integrate.quad(lambda x: x * float(self._density_rel(np.array(x))),
                                self._lo, self._hi, points=[self._mode_x], epsabs=1e-14, epsrel=1e-12, limit=500)
        return val / self._mass

    def variance(self) -> float:
        return self.moment(2, central=True)

    def sample(self, n: int, rng: RngPolicy, stream: int = STREAM_SAMPLES) -> np.ndarray:
        raise UnsupportedError(f"no sampler for {self!r}")

    def _blocks(self, n: int, rng: RngPolicy, stream: int, draw) -> np.ndarray:
        out = [draw(rng.generator(b, stream), min(SAMPLE_BLOCK, n - b * SAMPLE_BLOCK))
               for b in range(math.ceil(n / SAMPLE_BLOCK))]
        return np.concatenate(out) if out else np.empty(0)


def normalize(d: DensitySpec) -> float:
    """``Z = integral of exp(log_unnormalized)``."""
    d._init()
    return d._mass * math.exp(d._peak)


def cdf(d: DensitySpec, x):
    return d.cdf(x)


def sample(d: DensitySpec, n: int, rng: RngPolicy, stream: int = STREAM_SAMPLES) -> np.ndarray:
    return d.sample(n, rng, stream)


class LambdaF(DensitySpec):
    """Density ``exp(-x^2/2 - 2/(gamma+1) sgn(x) F(sgn x) |x|^(gamma+1))``."""

    def __init__(self, drift: DriftSpec):
        if not drift.homogeneous:
            raise PreconditionError("LambdaF needs a homogeneous drift")
        self.drift = drift
        g = drift.gamma
        c = 2.0 / (g + 1.0)
        fp, fm = drift.f_plus, drift.f_minus

        def logf(x):
            x = np.asarray(x, dtype=float)
            pot = np.where(x > 0, fp, np.where(x < 0, -fm, 0.0)) * np.abs(x) ** (g + 1)
            return -0.5 * x * x - c * pot

        self._penalty_coef = (c * fp, -c * fm)
        super().__init__(logf, f"LambdaF(F(1)={fp}, F(-1)={fm}, gamma={g})")

    def sample(self, n: int, rng: RngPolicy, stream: int = STREAM_SAMPLES) -> np.ndarray:
        if not self.drift.dissipative():
            raise UnsupportedError("rejection sampler needs a dissipative drift")
        cp, cm = self._penalty_coef
        g1 = self.drift.gamma + 1.0

        def draw(gen, m):
            got = []
            need = m
            while need > 0:
                z = gen.standard_normal(max(2 * need, 64))
                pen = np.where(z > 0, cp, cm) * np.abs(z) ** g1
                keep = z[gen.random(z.size) < np.exp(-pen)]
                got.append(keep[:need])
                need -= len(got[-1])
            return np.concatenate(got)

        return self._blocks(n, rng, stream, draw)


class PiF(DensitySpec):
    """Density ``exp(-(2 rho/(gamma+1)) |x|^(gamma+1))``."""

    def __init__(self, rho: float, gamma: float):
        if not rho > 0:
            raise PreconditionError("rho must be > 0")
        if not gamma >= 1:
            raise PreconditionError("gamma must be >= 1")
        self.rho, self.gamma = float(rho), float(gamma)
        c = 2.0 * rho / (gamma + 1.0)
        p = gamma + 1.0
        super().__init__(lambda x: -c * np.abs(np.asarray(x, dtype=float)) ** p,
                         f"PiF(rho={rho}, gamma={gamma})")

    @classmethod
    def from_drift(cls, drift: DriftSpec) -> "PiF":
        if not (drift.homogeneous and drift.symmetric() and drift.f_plus > 0):
            raise PreconditionError("PiF needs F = rho sgn(v)|v|^gamma with rho > 0")
        return cls(drift.f_plus, drift.gamma)

    def exact_variance(self) -> float:
        p = self.gamma + 1.0
        c = 2.0 * self.rho / p
        return c ** (-2.0 / p) * math.exp(special.gammaln(3.0 / p) - special.gammaln(1.0 / p))

    def sample(self, n: int, rng: RngPolicy, stream: int = STREAM_SAMPLES) -> np.ndarray:
        p = self.gamma + 1.0
        scale = p / (2.0 * self.rho)

        def draw(gen, m):
            g = gen.gamma(1.0 / p, 1.0, size=m)
            sign = np.where(gen.random(m) < 0.5, -1.0, 1.0)
            return sign * (g * scale) ** (1.0 / p)

        return self._blocks(n, rng, stream, draw)


def _scale_exponent(drift: DriftSpec):
    g = drift.gamma
    c = 2.0 / (g + 1.0)

    def e(y):
        s = 1.0 if y > 0 else (-1.0 if y < 0 else 0.0)
        fs = drift.f_plus if s > 0 else (drift.f_minus if s < 0 else 0.0)
        return 0.5 * y * y + c * s * fs * abs(y) ** (g + 1)

    return e


def log_abs_scale_function(drift: DriftSpec, x: float) -> float:
    """``log |p(x)|`` computed without forming ``exp`` of large exponents."""
    if not drift.homogeneous:
        raise PreconditionError("scale function needs a homogeneous drift")
    if x == 0:
        return -math.inf
    e = _scale_exponent(drift)
    a, b = (0.0, x) if x > 0 else (x, 0.0)
    ys = np.linspace(a, b, 513)
    vals = [e(float(y)) for y in ys]
    k = int(np.argmax(vals))
    top, peak = vals[k], float(ys[k])
    # the integrand can concentrate in a window of width ~1/|e'| around the peak;
    # geometric breakpoints make sure quadrature resolves it
    slope = abs(peak + 2.0 * eval_drift(drift, peak))
    w = 1.0 / max(slope, 1.0)
    offsets = w * 4.0 ** np.arange(12)
    pts = np.concatenate([peak - offsets, peak + offsets])
    pts = np.unique(pts[(pts > a) & (pts < b)])
    val, err = integrate.quad(lambda y: math.exp(e(y) - top), a, b, points=pts if len(pts) else None,
                              epsabs=0.0, epsrel=1e-12, limit=500)
    if not val > 0:
        raise QuadratureError("scale function quadrature failed")
    return top + math.log(val)


def scale_function(drift: DriftSpec, x: float) -> float:
    """``p(x) = int_0^x exp(y^2/2 + 2/(gamma+1) sgn(y) F(sgn y) |y|^(gamma+1)) dy``.

    Returns ``+-inf`` when the value exceeds double range.
    """
    if x == 0:
        return 0.0
    la = log_abs_scale_function(drift, x)
    mag = math.exp(la) if la < 709.7 else math.inf
    return math.copysign(mag, x)
