"""Run every verification suite at its default configuration.

Prints one line per report and writes each suite's JSON report to --outdir.

    python3 scripts/run_acceptance.py --outdir reports
"""

import argparse
import pathlib
import time

from klim.suites import SUITES, default_config, run_suite


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", default="reports")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("suites", nargs="*", default=list(SUITES) + ["explosion"])
    args = p.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name in args.suites:
        start = time.perf_counter()
        result = run_suite(name, default_config(name).with_(seed=args.seed), threads=args.threads)
        (out / f"{name}.json").write_text(result.to_json() + "\n", encoding="utf-8")
        print(f"== {name} ({time.perf_counter() - start:.1f} s)")
        for rep in result.reports:
            print("  " + rep.line())
        failed += not result.passed
    print(f"{len(args.suites) - failed}/{len(args.suites)} suites passed")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
