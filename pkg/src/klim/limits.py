"""Limit objects of the three regimes and the rescaling that targets them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import DomainError, KlimError, PreconditionError, UnsupportedError
from .integrate import PathBundle
from .invariant import LambdaF, PiF
from .model import DriftSpec
from .timechange import SNAP_RTOL, _sample_at


class NotPSDError(KlimError, ArithmeticError):
    pass


@dataclass(frozen=True)
class Gaussian:
    mean: float
    var: float

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.var == 0:
            out = (x >= self.mean).astype(float)
        else:
            out = norm.cdf(x, loc=self.mean, scale=math.sqrt(self.var))
        return float(out) if out.ndim == 0 else out

    def variance(self) -> float:
        return self.var


@dataclass(frozen=True)
class ScaledLaw:
    """Law of ``scale * Z``."""

    base: object
    scale: float

    def cdf(self, x):
        if self.scale == 0:
            return Gaussian(0.0, 0.0).cdf(x)
        return self.base.cdf(np.asarray(x, dtype=float) / self.scale)

    def variance(self) -> float:
        return self.scale ** 2 * self.base.variance()


class LimitLaw:
    variant: str = ""
    gaussian: bool = False

    def cov(self, s: float, t: float):
        raise NotImplementedError

    def marginal(self, t: float):
        raise NotImplementedError


class KolmogorovPair(LimitLaw):
    """``(B_t, int_0^t B_u du)``."""

    variant = "kolmogorov_pair"
    gaussian = True

    @staticmethod
    def cov_vx(s: float, t: float) -> float:
        """``Cov(B_s, int_0^t B)``."""
        return s * t - s * s / 2 if s <= t else t * t / 2

    @staticmethod
    def cov_xx(s: float, t: float) -> float:
        a, b = min(s, t), max(s, t)
        return a * a * (3 * b - a) / 6

    def cov(self, s: float, t: float) -> np.ndarray:
        """``[[Cov(V_s,V_t), Cov(V_s,X_t)], [Cov(X_s,V_t), Cov(X_s,X_t)]]``."""
        return np.array([[min(s, t), self.cov_vx(s, t)],
                         [self.cov_vx(t, s), self.cov_xx(s, t)]])

    def marginal(self, t: float, component: str = "v") -> Gaussian:
        return Gaussian(0.0, t if component == "v" else t ** 3 / 3)


class CriticalLaw(LimitLaw):
    """``sqrt(t) H(log t)`` with ``H`` the stationary homogenized process."""

    variant = "critical_law"

    def __init__(self, drift: DriftSpec):
        self.drift = drift
        self.invariant = LambdaF(drift)
        self.gaussian = drift.gamma == 1.0 and drift.symmetric() and 1 + 2 * drift.f_plus > 0

    @property
    def theta(self) -> float:
        return 0.5 + self.drift.f_plus

    def cov(self, s: float, t: float) -> float:
        if not self.gaussian:
            raise UnsupportedError("closed-form covariance only for gamma = 1 with odd F")
        if s <= 0 or t <= 0:
            return 0.0
        a, b = min(s, t), max(s, t)
        return math.sqrt(a * b) * (a / b) ** self.theta / (2 * self.theta)

    def marginal(self, t: float):
        if self.gaussian:
            return Gaussian(0.0, t / (2 * self.theta))
        return ScaledLaw(self.invariant, math.sqrt(t))

    def position_cov(self, s: float, t: float) -> float:
        """``Cov(int_0^s V, int_0^t V)`` by numeric double integration of :meth:`cov`."""
        if s <= 0 or t <= 0:
            return 0.0
        f = lambda r, u: self.cov(u, r)  # noqa: E731
        # split along the diagonal, where the integrand has a kink
        below, _ = integrate.dblquad(f, 0.0, s, 0.0, lambda u: min(u, t), epsabs=1e-13, epsrel=1e-10)
        above, _ = integrate.dblquad(f, 0.0, s, lambda u: min(u, t), t, epsabs=1e-13, epsrel=1e-10)
        return float(below + above)


class SubcriticalVelocity(LimitLaw):
    """Independent ``t^q Z_t`` with ``Z_t ~ PiF``."""

    variant = "subcritical_velocity"

    def __init__(self, rho: float, gamma: float, q: float):
        self.invariant = PiF(rho, gamma)
        self.q = float(q)
        self.gaussian = gamma == 1.0

    def cov(self, s: float, t: float) -> float:
        if s != t:
            return 0.0
        return t ** (2 * self.q) * self.invariant.exact_variance()

    def marginal(self, t: float):
        if self.gaussian:
            return Gaussian(0.0, t ** (2 * self.q) * self.invariant.exact_variance())
        return ScaledLaw(self.invariant, t ** self.q)


class SubcriticalPosition(LimitLaw):
    """Centered Gaussian with ``K(s,t) = (s^t)^(1+2 beta) / (rho^2 (1+2 beta))``."""

    variant = "subcritical_position"
    gaussian = True

    def __init__(self, rho: float, beta: float):
        if not beta > -0.5:
            raise PreconditionError("beta must exceed -1/2")
        self.rho, self.beta = float(rho), float(beta)

    def cov(self, s: float, t: float) -> float:
        m = max(min(s, t), 0.0)
        return m ** (1 + 2 * self.beta) / (self.rho ** 2 * (1 + 2 * self.beta))

    def marginal(self, t: float) -> Gaussian:
        return Gaussian(0.0, self.cov(t, t))


def theoretical_cov(law: LimitLaw, s: float, t: float):
    return law.cov(s, t)


def marginal_law(law: LimitLaw, t: float, **kw):
    return law.marginal(t, **kw)


def fdd_covariance_matrix(law: LimitLaw, times: Sequence[float], components: str = "v") -> np.ndarray:
    """Covariance of the limit at ``times``.

    For the Kolmogorov pair ``components`` selects ``"v"``, ``"x"`` or
    ``"vx"`` (velocities first, then positions).
    """
    times = [float(t) for t in times]
    d = len(times)
    if isinstance(law, KolmogorovPair):
        blocks = {"v": lambda s, t: min(s, t), "x": law.cov_xx}
        if components in blocks:
            f = blocks[components]
            m = np.array([[f(s, t) for t in times] for s in times])
        elif components == "vx":
            m = np.empty((2 * d, 2 * d))
            for i, s in enumerate(times):
                for j, t in enumerate(times):
                    c = law.cov(s, t)
                    m[i, j], m[i, d + j] = c[0, 0], c[0, 1]
                    m[d + i, j], m[d + i, d + j] = c[1, 0], c[1, 1]
        else:
            raise PreconditionError(f"unknown components {components!r}")
    elif isinstance(law, SubcriticalVelocity) or law.gaussian:
        m = np.array([[law.cov(s, t) for t in times] for s in times])
    else:
        raise UnsupportedError(f"{law.variant} has no closed-form f.d.d. covariance")
    eig = np.linalg.eigvalsh(m)
    if eig.min() < -1e-10 * max(1.0, abs(eig).max()):
        raise NotPSDError(f"assembled covariance is not PSD (min eigenvalue {eig.min():g})")
    return m


@dataclass
class RescaledEnsemble:
    epsilon: float
    t: np.ndarray
    v_scaled: np.ndarray
    x_scaled: np.ndarray
    a: float
    b: float
    exploded: np.ndarray
    interpolated: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return ~self.exploded

    def column(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise PreconditionError(f"time {t} is not in the rescaled grid")
        return i

    def values(self, t: float, component: str = "v", valid_only: bool = True) -> np.ndarray:
        data = self.v_scaled if component == "v" else self.x_scaled
        col = data[:, self.column(t)]
        return col[self.valid] if valid_only else col


def rescale(bundle: PathBundle, epsilon: float, a: float, b: float, t_grid) -> RescaledEnsemble:
    """``(eps^a V_{t/eps}, eps^b X_{t/eps})`` for ``t`` in ``t_grid``."""
    if not 0 < epsilon <= 1:
        raise PreconditionError("epsilon must lie in (0, 1]")
    t = np.atleast_1d(np.asarray(getattr(t_grid, "nodes", t_grid), dtype=float))
    src = t / epsilon
    lo, hi = bundle.t[0], bundle.t[-1]
    if np.any(src > hi * (1 + SNAP_RTOL)) or np.any(src < lo * (1 - SNAP_RTOL)):
        raise DomainError(f"t/eps leaves the simulated horizon [{lo}, {hi}]")
    idx = np.clip(np.searchsorted(bundle.t, src), 0, len(bundle.t) - 1)
    near = np.minimum(np.abs(bundle.t[idx] - src), np.abs(bundle.t[np.maximum(idx - 1, 0)] - src))
    interpolated = near > 1e-9 * np.maximum(1.0, src)
    v = _sample_at(bundle.t, bundle.v, src) * epsilon ** a
    x = _sample_at(bundle.t, bundle.x, src) * epsilon ** b
    return RescaledEnsemble(float(epsilon), t, v, x, float(a), float(b),
                            bundle.exploded.copy(), interpolated)
