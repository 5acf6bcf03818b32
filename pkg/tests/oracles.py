"""Independent reference computations used by the tests."""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import norm


def linear_ske_moments(c: float, beta: float, t0: float, v0: float, x0: float, t_end: float):
    """Exact first and second moments of dV = dB - c t^-beta V dt, dX = V dt.

    Returns (E V, E X, Var V, Cov(V, X), Var X) at ``t_end`` from the moment ODEs.
    """

    def rhs(t, y):
        mv, mx, vv, vx, xx = y
        k = c * t ** -beta
        return [-k * mv, mv, -2 * k * vv + 1.0, -k * vx + vv, 2 * vx]

    y0 = [v0, x0, v0 * v0, v0 * x0, x0 * x0]
    sol = solve_ivp(rhs, (t0, t_end), y0, method="LSODA", rtol=1e-11, atol=1e-12)
    mv, mx, vv, vx, xx = sol.y[:, -1]
    return mv, mx, vv - mv * mv, vx - mv * mx, xx - mx * mx


def wilson(k: int, n: int, z: float = norm.ppf(0.975)):
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return mid - half, mid + half


def var_se(x) -> float:
    """Standard error of the sample variance (fourth-moment formula)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    m2 = np.var(x)
    m4 = np.mean((x - x.mean()) ** 4)
    return math.sqrt(max(m4 - m2 * m2, 0.0) / n)
