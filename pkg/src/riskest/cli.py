"""Command-line entry point: ``riskest {estimate,df,analyze,experiment,denoise}``.

Exit codes: 0 success, 2 unreadable input or bad arguments, 3 dimension
mismatch or missing design matrix, 4 solver failure (or rows not written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .gaussian_model import make_coupled_draws
from .predictors import DimensionError, SolverError, parse_predictor_spec
from .risk_estimators import (BY_VARIANTS, CB_VARIANTS, by_risk, cb_df, cb_risk, efron_risk, sure,
                              ye_df)
from .rng import FOLDS, RngSeed

EXIT_OK, EXIT_PARSE, EXIT_DIM, EXIT_SOLVER = 0, 2, 3, 4


class InputError(Exception):
    pass


def _read_vector(path) -> np.ndarray:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if lines:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]  # header row
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines]
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not rows or any(len(r) != 1 for r in rows):
        raise InputError(f"{path}: expected a single numeric column")
    return np.array([r[0] for r in rows])


def _read_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            first = fh.readline()
        try:
            [float(v) for v in first.strip().split(",")]
            skip = 0
        except ValueError:
            skip = 1
        X = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read design matrix {path}: {exc}") from exc
    return X


def _seed(args, cfg_seed=None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RISKEST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"RISKEST_SEED={env!r} is not an integer") from exc
    return 0 if cfg_seed is None else cfg_seed


def _threads(text) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'")
    return v


def _load_problem(args):
    y = _read_vector(args.data)
    design = _read_matrix(args.design) if args.design else None
    folds = None
    spec = args.predictor
    if spec.split(":")[0].strip() == "lasso_cv":
        from .solvers import make_folds

        k = 10
        for item in spec.partition(":")[2].split(","):
            if item.strip().startswith("folds="):
                k = int(float(item.split("=")[1]))
        folds = make_folds(y.size, min(k, y.size), RngSeed(_seed(args)).generator(FOLDS))
    try:
        g = parse_predictor_spec(spec, design, folds=folds)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DimensionError):
            raise
        raise InputError(f"bad predictor spec {spec!r}: {exc}") from exc
    if g.needs_design and design is None:
        raise DimensionError(f"{g.kind} needs --design")
    if g.expected_n is not None and g.expected_n != y.size:
        raise DimensionError(f"data has {y.size} entries but the design has {g.expected_n} rows")
    return y, g


def cmd_estimate(args) -> int:
    y, g = _load_problem(args)
    variant = args.variant
    if variant == "sure":
        res = sure(y, g, args.sigma2)
    elif variant == "efron":
        d = make_coupled_draws(y, args.sigma2, args.alpha, args.B, RngSeed(_seed(args)))
        res = efron_risk(y, g, args.sigma2, d)
    else:
        d = make_coupled_draws(y, args.sigma2, args.alpha, args.B, RngSeed(_seed(args)))
        if variant in CB_VARIANTS:
            res = cb_risk(d, g, args.sigma2, variant)
        else:
            res = by_risk(y, g, args.sigma2, args.alpha, d, variant)
    print(json.dumps(res.summary(), sort_keys=True))
    return EXIT_OK


def cmd_df(args) -> int:
    y, g = _load_problem(args)
    d = make_coupled_draws(y, args.sigma2, args.alpha, args.B, RngSeed(_seed(args)))
    G = g.predict_many(d.ystar)
    out = []
    for est in (cb_df(d, g, args.sigma2, args.alpha, fitted=G),
                ye_df(y, g, args.sigma2, args.alpha, d, fitted=G),
                ye_df(y, g, args.sigma2, args.alpha, d, "by_ye_per_coordinate", fitted=G)):
        out.append({"method": est.method, "value": est.value, "alpha": est.alpha, "B": est.B})
    out[2]["method"] = "ye_df_per_coordinate"
    if g.has_analytic_divergence:
        out.append({"method": "sure_divergence", "value": float(g.divergence(y)), "alpha": 0.0, "B": 0})
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _config(args, default_name):
    path = args.config
    try:
        if path is None:
            path = harness.bundled_config(default_name)
        elif not os.path.exists(path):
            path = harness.bundled_config(path)
        cfg = harness.load_config(path, args.set or ())
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"config error: {exc}") from exc
    seed = _seed(args, cfg.seed)
    from dataclasses import replace

    return replace(cfg, seed=seed, threads=args.threads or cfg.threads)


def _run_and_write(cfg, out) -> int:
    result = harness.run_experiment(cfg)
    for path in harness.write_result(result, out):
        print(path)
    if result.failures:
        print(f"{len(result.failures)} rows failed; see the JSON sidecar", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_experiment(args) -> int:
    return _run_and_write(_config(args, "figure1"), args.out)


def cmd_denoise(args) -> int:
    from dataclasses import replace

    cfg = replace(_config(args, "denoise"), experiment="denoise")
    return _run_and_write(cfg, args.out)


def cmd_analyze(args) -> int:
    from dataclasses import replace

    cfg = replace(_config(args, "analyze"), experiment="analyze")
    return _run_and_write(cfg, args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $RISKEST_SEED)")
    common.add_argument("--threads", type=_threads, default=None, help="worker threads or 'auto'")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--data", required=True, help="single-column numeric file (optional header)")
    est.add_argument("--predictor", required=True, help="e.g. identity, soft_threshold:t=1, lasso:lam=0.31")
    est.add_argument("--design", help="CSV design matrix for regression predictors")
    est.add_argument("--sigma2", type=float, required=True)
    est.add_argument("--alpha", type=float, default=0.1)
    est.add_argument("--B", type=int, default=100)

    cfgp = argparse.ArgumentParser(add_help=False)
    cfgp.add_argument("--config", help="config file or bundled config name")
    cfgp.add_argument("--set", "--override", action="append", metavar="KEY=VALUE",
                      help="override a config entry (repeatable)")
    cfgp.add_argument("--out", default="results", help="output directory")

    p = argparse.ArgumentParser(prog="riskest", description="Coupled bootstrap risk estimation.")
    sub = p.add_subparsers(dest="command", required=True)
    e = sub.add_parser("estimate", parents=[common, est], help="estimate risk of a rule on one data vector")
    e.add_argument("--variant", default="cb_default",
                   choices=CB_VARIANTS + BY_VARIANTS + ("efron", "sure"))
    e.set_defaults(func=cmd_estimate)
    d = sub.add_parser("df", parents=[common, est], help="estimate degrees of freedom")
    d.set_defaults(func=cmd_df)
    for name, fn, help_ in (("analyze", cmd_analyze, "write the analysis tables"),
                            ("experiment", cmd_experiment, "run a configured experiment"),
                            ("denoise", cmd_denoise, "run the fused lasso denoising experiment")):
        s = sub.add_parser(name, parents=[common, cfgp], help=help_)
        s.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "B", None) is not None and args.B < 1:
            raise InputError("--B must be at least 1")
        return args.func(args)
    except InputError as exc:
        print(f"riskest: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionError as exc:
        print(f"riskest: {exc}", file=sys.stderr)
        return EXIT_DIM
    except SolverError as exc:
        print(f"riskest: solver failure after {exc.iterations} iterations: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"riskest: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
