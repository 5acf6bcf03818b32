"""Exploded fraction by time T for gamma=3, F(1)=-1, F(-1)=0 over a range of v0.

Uses vanilla Euler with the default explosion threshold; prints CSV with a
95% Wilson interval per row.

    python3 scripts/explosion_scan.py --v0 0.5 1 2 5 --paths 2000
"""

import argparse

from klim import DriftSpec, ModelSpec
from klim.suites import default_config, run_suite


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--v0", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    p.add_argument("--horizon", type=float, default=2.0)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    base = default_config("explosion")
    print("v0,exploded,fraction,wilson_lo,wilson_hi")
    for v0 in args.v0:
        spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=0.0, gamma=3.0), 0.0, v0=v0)
        cfg = base.with_(model=spec, n_paths=args.paths, n_steps=args.steps, seed=args.seed,
                         t_eval=(args.horizon,))
        meta = run_suite("explosion", cfg).reports[0].metadata
        lo, hi = meta["wilson_95"]
        print(f"{v0:g},{meta['exploded']},{meta['fraction']:.4f},{lo:.4f},{hi:.4f}")


if __name__ == "__main__":
    main()
