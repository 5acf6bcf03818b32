"""Command-line entry point: ``python3 -m klim <command> [flags]``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration
error, 3 runtime failure (explosion of every path, quadrature, I/O).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ExperimentConfig
from .errors import (DomainError, ExplosionError, PreconditionError, QuadratureError, SpecError,
                     UnsupportedError)
from .integrate import RngPolicy, TimeGrid, simulate_ske
from .invariant import LambdaF, PiF
from .model import DriftSpec, ModelSpec
from .stats import reports_to_csv
from .suites import SUITES, default_config, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

MODEL_FLAGS = {"gamma": "gamma", "beta": "beta", "f_plus": "f_plus", "f_minus": "f_minus",
               "t0": "t0", "v0": "v0", "x0": "x0"}
CONFIG_FLAGS = {"eps": "epsilon", "paths": "n_paths", "steps": "n_steps", "seed": "seed",
                "grid": "grid", "threshold_margin": "margin", "t_eval": "t_eval"}


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--gamma", type=float, help="homogeneity exponent of F")
    g.add_argument("--beta", type=float, help="time exponent")
    g.add_argument("--rho", type=float, help="shorthand for F(1) = rho, F(-1) = -rho")
    g.add_argument("--f-plus", type=float, help="F(1)")
    g.add_argument("--f-minus", type=float, help="F(-1)")
    g.add_argument("--t0", type=float)
    g.add_argument("--v0", type=float)
    g.add_argument("--x0", type=float)
    e = p.add_argument_group("experiment")
    e.add_argument("--eps", type=float, help="scaling parameter epsilon in (0, 1]")
    e.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    e.add_argument("--steps", type=int, help="number of time steps")
    e.add_argument("--seed", type=int, help="master seed (default 0)")
    e.add_argument("--t-eval", type=float, nargs="+", help="evaluation times")
    e.add_argument("--grid", choices=["uniform", "log"])
    e.add_argument("--threshold-margin", type=float, help="additive KS margin overriding the suite thresholds")
    e.add_argument("--config", metavar="FILE", help="JSON config; its values override the flags")
    e.add_argument("--threads", type=int, help="worker threads (default: KLIM_THREADS or all cores)")
    e.add_argument("--out", choices=["json", "csv", "text"], help="output format")
    e.add_argument("--file", metavar="PATH", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="klim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate paths and write them as CSV or a binary dump")
    _common(s)
    s.add_argument("--binary", action="store_true", help="write the KLIM binary dump (needs --file)")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    _common(v)

    x = sub.add_parser("explosion-prob", help="estimate the explosion fraction with a Wilson interval")
    _common(x)

    i = sub.add_parser("sample-invariant", help="draw samples from an invariant law")
    i.add_argument("--law", choices=["lambda", "pi"], default="lambda")
    _common(i)
    return p


def _simulate_defaults() -> ExperimentConfig:
    return ExperimentConfig(ModelSpec(DriftSpec.power(1.0, 1.0), 2.0), n_paths=100, n_steps=1000)


def _base_config(args) -> ExperimentConfig:
    if args.command == "verify":
        return default_config(args.suite)
    if args.command == "explosion-prob":
        return default_config("explosion")
    if args.command == "sample-invariant":
        return ExperimentConfig(ModelSpec(DriftSpec.power(1.0, 1.0), 1.0), n_paths=10_000)
    return _simulate_defaults()


def _read_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise SpecError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError("config", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(d, dict):
        raise SpecError("config", "expected a JSON object")
    return d


def resolve_config(args) -> tuple[ExperimentConfig, bool, str | None]:
    """Defaults, then flags, then the config file.

    Returns the config, whether any model parameter was overridden, and the
    output format requested by the config file (if any).
    """
    d = _base_config(args).to_dict()
    model = d["model"]
    touched = False
    if any(getattr(args, f) is not None for f in ("rho", "f_plus", "f_minus", "gamma")):
        model["bound_K"] = None  # re-derived from the new coefficients
    if args.rho is not None:
        model.update(f_plus=args.rho, f_minus=-args.rho)
        touched = True
    for flag, key in MODEL_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            model[key] = val
            touched = True
    for flag, key in CONFIG_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            d[key] = list(val) if flag == "t_eval" else val
    file_output = None
    if args.config:
        fd = _read_config_file(args.config)
        if "model" in fd:
            if not isinstance(fd["model"], dict):
                raise SpecError("model", "expected an object")
            model.update(fd["model"])
            touched = True
        for k, val in fd.items():
            if k != "model":
                d[k] = val
        file_output = fd.get("output")
    d["model"] = model
    return ExperimentConfig.from_dict(d), touched, file_output


def _emit(text: str | bytes, path: str | None):
    if path is None:
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
        else:
            sys.stdout.write(text)
        return
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
        fh.write(text)


def cmd_simulate(cfg: ExperimentConfig, args, threads) -> int:
    spec = cfg.model
    horizon = max(cfg.t_eval) / cfg.epsilon
    if horizon <= spec.t0:
        raise SpecError("t_eval", f"horizon max(t_eval)/eps = {horizon:g} must exceed t0")
    n = cfg.n_steps or 1000
    grid = (TimeGrid.logarithmic if cfg.grid == "log" else TimeGrid.uniform)(spec.t0, horizon, n)
    bundle = simulate_ske(spec, grid, cfg.n_paths, RngPolicy(cfg.seed), threads=threads)
    if args.binary:
        if not args.file:
            raise SpecError("file", "--binary needs --file")
        _emit(bundle.to_bytes(), args.file)
    else:
        _emit(bundle.to_csv(), args.file)
    return EXIT_PASS


def _emit_result(result, fmt: str, path):
    if fmt == "csv":
        _emit(reports_to_csv(result.reports), path)
    else:
        _emit(result.to_json() + "\n", path)


def cmd_verify(cfg, args, threads, touched, fmt) -> int:
    kw = {}
    if args.suite in ("timechange", "moments"):
        kw["companion"] = not touched
    result = run_suite(args.suite, cfg, threads=threads, **kw)
    _emit_result(result, fmt, args.file)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_explosion_prob(cfg, args, threads, fmt) -> int:
    result = run_suite("explosion", cfg, threads=threads)
    _emit_result(result, fmt, args.file)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_sample_invariant(cfg, args, fmt) -> int:
    drift = cfg.model.drift
    law = LambdaF(drift) if args.law == "lambda" else PiF.from_drift(drift)
    x = law.sample(cfg.n_paths, RngPolicy(cfg.seed))
    lines = [repr(float(v)) for v in x]
    if fmt == "csv":
        lines.insert(0, "sample")
    _emit("\n".join(lines) + "\n", args.file)
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        os.environ["KLIM_THREADS"] = str(args.threads)
    threads = args.threads
    try:
        cfg, touched, file_output = resolve_config(args)
        defaults = {"simulate": "csv", "sample-invariant": "text"}
        fmt = file_output or args.out or defaults.get(args.command, "json")
        if args.command == "simulate":
            return cmd_simulate(cfg, args, threads)
        if args.command == "verify":
            return cmd_verify(cfg, args, threads, touched, fmt)
        if args.command == "explosion-prob":
            return cmd_explosion_prob(cfg, args, threads, fmt)
        return cmd_sample_invariant(cfg, args, fmt)
    except (SpecError, PreconditionError, DomainError, UnsupportedError) as exc:
        print(f"klim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExplosionError, QuadratureError, OSError) as exc:
        print(f"klim: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
