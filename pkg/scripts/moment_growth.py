"""Fitted log-log slopes of E|V_t|^kappa for the moment-suite configurations.

Prints the fitted slope, the predicted exponent and their difference for
several seeds, to show the spread of the slope estimate.

    python3 scripts/moment_growth.py --seeds 0 1 2 --paths 5000
"""

import argparse

from klim import RngPolicy, TimeGrid
from klim.stats import moment_growth_check
from klim.suites import moment_configs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--t-end", type=float, default=1e4)
    args = p.parse_args()
    print("config,kappa,seed,slope,predicted,difference")
    for name, spec, kappa in moment_configs():
        grid = TimeGrid.logarithmic(spec.t0, args.t_end, args.steps)
        for seed in args.seeds:
            rep = moment_growth_check(spec, kappa, grid, args.paths, RngPolicy(seed))
            m = rep.metadata
            print(f"{name},{kappa:g},{seed},{m['slope']:.4f},{m['predicted']:.4f},{rep.statistic:+.4f}")


if __name__ == "__main__":
    main()
