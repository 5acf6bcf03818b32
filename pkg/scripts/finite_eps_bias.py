"""Exact finite-epsilon second moments of the linear model versus the limit targets.

For F(v) = c v the moments of (V, X) solve a closed linear ODE, so the rescaled
variances at any epsilon are available without Monte Carlo. The ratio
exact/limit shows how far a finite-epsilon experiment sits from its limit.

    python3 scripts/finite_eps_bias.py --eps 1e-2 1e-3 1e-4
"""

import argparse

from scipy.integrate import solve_ivp


def moments(c, beta, t0, v0, t_end):
    def rhs(t, y):
        mv, mx, vv, vx, xx = y
        k = c * t ** -beta
        return [-k * mv, mv, -2 * k * vv + 1.0, -k * vx + vv, 2 * vx]

    sol = solve_ivp(rhs, (t0, t_end), [v0, 0.0, v0 * v0, 0.0, 0.0], method="LSODA", rtol=1e-11, atol=1e-12)
    mv, mx, vv, vx, xx = sol.y[:, -1]
    return vv - mv * mv, vx - mv * mx, xx - mx * mx


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = p.parse_args()
    print("regime,eps,quantity,exact,limit,ratio")
    for eps in args.eps:
        # supercritical: beta=2, scalings sqrt(eps) and eps^1.5, limit Var X = 1/3, Cov = 1/2
        vv, vx, xx = moments(1.0, 2.0, 1.0, 1.0, 1 / eps)
        for name, val, lim in (("var_velocity", eps * vv, 1.0), ("var_position", eps ** 3 * xx, 1 / 3),
                               ("cov_velocity_position", eps ** 2 * vx, 0.5)):
            print(f"supercritical,{eps:g},{name},{val:.6g},{lim:.6g},{val / lim:.4f}")
        # subcritical: beta=1/2, rho=1, position scaling eps^(beta+1/2), limit 1/(rho^2 (1+2 beta)) = 1/2
        vv, vx, xx = moments(1.0, 0.5, 1.0, 1.0, 1 / eps)
        val = eps ** 2 * xx
        print(f"subcritical,{eps:g},var_position,{val:.6g},0.5,{val / 0.5:.4f}")


if __name__ == "__main__":
    main()
