"""Command-line entry point: ``distreg <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or invalid parameter, 2 data error,
3 numeric failure. Flags override values from ``--config FILE`` (``key=value``
lines, keys named like the long flags), which override built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .base_kernels import kernel_from_spec
from .dist_kernels import dist_kernel_from_spec
from .embeddings import DiscreteDistribution, embedding_gram
from .errors import DataError, DimensionError, DistRegError, ScheduleError, SolveError
from .experiments import (
    RateExperimentConfig,
    load_bag_csv,
    run_concentration,
    run_entropy_task,
    run_rate_experiment,
)
from .merr import fit, load_model, predict_many, save_model, select_lambda
from .rng import derive_rng
from .theory import (
    BoundInputs,
    PriorClassParams,
    effective_dim_class,
    lambda_schedule,
    rate_table,
    reconstruction_B,
    residual_A,
    theorem1_bound,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> List[float]:
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> List[int]:
    return [int(float(t)) for t in str(text).split(",") if t.strip()]


def _fnum(text: str) -> float:
    # accepts "inf" for the large-b limit
    return float(text)


def _add_kernel_flags(p):
    p.add_argument("--base", default="gaussian", choices=["gaussian", "linear", "polynomial"],
                   help="base kernel on points")
    p.add_argument("--bandwidth", type=float, default=1.0, help="Gaussian base bandwidth")
    p.add_argument("--radius-bound", type=float, default=1.0, help="input radius for linear/polynomial")
    p.add_argument("--degree", type=int, default=2, help="polynomial degree")
    p.add_argument("--offset", type=float, default=1.0, help="polynomial offset")
    p.add_argument("--outer", default="linear", choices=["linear", "gaussian"],
                   help="outer kernel on embeddings")
    p.add_argument("--outer-bandwidth", type=float, default=1.0, help="Gaussian outer bandwidth")


def _common(p, seed=True):
    p.add_argument("--config", help="key=value file supplying defaults for any flag")
    p.add_argument("--out", help="also write the CSV report to this path")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="master random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"distreg {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit", help="train MERR on a bag CSV and save the model")
    _common(p)
    _add_kernel_flags(p)
    p.add_argument("--data", required=True, help="training bag CSV")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--lam", type=float, help="ridge parameter (skips cross-validation)")
    p.add_argument("--lam-grid", type=_floats, default="1e-6,1e-5,1e-4,1e-3,1e-2,1e-1",
                   help="comma-separated grid for cross-validation")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds")

    p = sub.add_parser("predict", help="predict labels for bags with a saved model")
    _common(p, seed=False)
    p.add_argument("--model", required=True, help="model file written by fit")
    p.add_argument("--data", required=True, help="bag CSV (labels may be empty)")

    p = sub.add_parser("bound", help="evaluate the excess-risk bound")
    _common(p, seed=False)
    for name, default, help_ in [
        ("--L", 1.0, "Hoelder constant L"), ("--h", 1.0, "Hoelder exponent h in (0,1]"),
        ("--b-K", 1.0, "outer kernel bound"), ("--b-k", 1.0, "base kernel bound"),
        ("--C", 1.0, "label bound |y| <= C"), ("--lam", 0.1, "ridge parameter"),
        ("--eta", 0.5, "confidence parameter in (0,1)"), ("--delta", 1.0, "confidence parameter > 0"),
        ("--M", 1.0, "noise moment constant M"), ("--Sigma", 1.0, "noise moment constant Sigma"),
        ("--A", None, "residual A(lam); default from the prior class"),
        ("--B", None, "reconstruction error B(lam); default from the prior class"),
        ("--Ndim", None, "effective dimension N(lam); default from the prior class"),
        ("--t-norm", None, "estimate of the covariance operator norm (advisory check)"),
        ("--b", 2.0, "eigen-decay exponent b > 1"), ("--c", 1.5, "smoothness exponent c in [1,2]"),
        ("--R", 1.0, "source norm bound R"), ("--beta", 1.0, "eigenvalue upper constant beta"),
    ]:
        p.add_argument(name, type=float, default=default, help=help_)
    p.add_argument("--l", type=int, default=100, help="number of bags")
    p.add_argument("--N", type=int, default=10_000, help="points per bag")

    p = sub.add_parser("rates", help="evaluate the convergence-rate table at l = N^a")
    _common(p, seed=False)
    p.add_argument("--a", type=float, required=True, help="exponent in l = N^a")
    p.add_argument("--b", type=_fnum, required=True, help="eigen-decay exponent (inf allowed)")
    p.add_argument("--c", type=float, required=True, help="smoothness exponent in [1,2]")
    p.add_argument("--h", type=float, required=True, help="Hoelder exponent in (0,1]")
    p.add_argument("--N", type=float, help="also report each row's lambda schedule at this N")

    p = sub.add_parser("concentration", help="Monte Carlo check of embedding concentration")
    _common(p)
    _add_kernel_flags(p)
    p.add_argument("--N", type=int, default=100, help="points per bag")
    p.add_argument("--trials", type=int, default=10_000, help="number of bags drawn")
    p.add_argument("--eps", type=_floats, default="0.1,0.2,0.5", help="epsilon grid")
    p.add_argument("--support-size", type=int, default=5, help="atoms of the uniform distribution")
    p.add_argument("--dim", type=int, default=2, help="dimension of the atoms")

    p = sub.add_parser("rate-exp", help="measure excess-risk decay along a lambda schedule")
    _common(p)
    p.add_argument("--a", type=float, default=0.4)
    p.add_argument("--b", type=_fnum, default=math.inf)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--row", type=int, default=1, help="rate-table row whose schedule is used")
    p.add_argument("--lam-scale", type=float, default=RateExperimentConfig.lam_scale,
                   help="constant multiplying the schedule")
    p.add_argument("--bandwidth", type=float, default=RateExperimentConfig.base_bandwidth,
                   help="Gaussian base bandwidth")
    p.add_argument("--N-grid", type=_ints, default="200,400,800,1600,3200")
    p.add_argument("--reps", type=int, default=RateExperimentConfig.reps)
    p.add_argument("--target", default="bumps", choices=["bumps", "linear", "zero"])
    p.add_argument("--noise-std", type=float, default=RateExperimentConfig.noise_std)
    p.add_argument("--n-test", type=int, default=RateExperimentConfig.n_test)

    p = sub.add_parser("entropy-demo", help="learn the entropy of Gaussian bags")
    _common(p)
    _add_kernel_flags(p)
    p.set_defaults(outer="gaussian")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--l-train", type=int, default=200)
    p.add_argument("--l-test", type=int, default=50)
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--lam-grid", type=_floats, default="1e-6,1e-5,1e-4,1e-3,1e-2,1e-1")
    p.add_argument("--folds", type=int, default=5)
    return parser


def read_config(path) -> Dict[str, str]:
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        config = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(config) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**config)
        args = parser.parse_args(argv)
    return args


def effective_config(args) -> Dict[str, str]:
    skip = {"config", "out", "command"}
    return {k: str(v) for k, v in sorted(vars(args).items()) if k not in skip}


class Report:
    """CSV report with a provenance comment header."""

    def __init__(self, args):
        self.args = args
        cfg = effective_config(args)
        blob = ";".join(f"{k}={v}" for k, v in cfg.items())
        digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
        seed = getattr(args, "seed", None)
        self.buf = io.StringIO()
        self.buf.write(
            f"# distreg {__version__} command={args.command} seed={seed} config_hash={digest}\n"
        )
        self.buf.write(f"# config {blob}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def row(self, *values):
        self.writer.writerow([_fmt(v) for v in values])

    def emit(self, stdout):
        text = self.buf.getvalue()
        stdout.write(text)
        if self.args.out:
            with open(self.args.out, "w", encoding="utf-8") as fh:
                fh.write(text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _base_kernel(args):
    return kernel_from_spec(
        args.base,
        bandwidth=args.bandwidth,
        radius_bound=args.radius_bound,
        degree=args.degree,
        offset=args.offset,
    )


def _outer_kernel(args, base):
    return dist_kernel_from_spec(args.outer, base.b_k, outer_bandwidth=args.outer_bandwidth)


# -- subcommands -----------------------------------------------------------


def cmd_fit(args, report):
    base = _base_kernel(args)
    outer = _outer_kernel(args, base)
    bags = load_bag_csv(args.data)
    eg = embedding_gram(base, bags)
    if args.lam is not None:
        lam = args.lam
        report.row("lambda", "cv_score")
        report.row(lam, None)
    else:
        lam, scores = select_lambda(bags, base, outer, args.lam_grid, args.folds, args.seed, eg=eg)
        report.row("lambda", "cv_score")
        for g, s in zip(args.lam_grid, scores):
            report.row(g, s)
    model = fit(bags, base, outer, lam, eg=eg)
    save_model(model, args.model)
    report.row("selected", lam)


def cmd_predict(args, report):
    model = load_model(args.model)
    bags = load_bag_csv(args.data)
    preds = predict_many(model, bags)
    report.row("bag_id", "prediction")
    for bag, p in zip(bags, preds):
        report.row(bag.bag_id, p)


def cmd_bound(args, report):
    inp = BoundInputs(
        L=args.L, h=args.h, b_K=args.b_K, b_k=args.b_k, C=args.C, l=args.l, N=args.N,
        lam=args.lam, eta=args.eta, delta=args.delta, M=args.M, Sigma=args.Sigma,
    )
    need_class = args.A is None or args.B is None or args.Ndim is None
    if need_class:
        p = PriorClassParams(args.b, args.c, R=args.R, alpha_eig=min(args.beta, 1.0),
                             beta_eig=args.beta, M=args.M, Sigma=args.Sigma)
    A = args.A if args.A is not None else residual_A(p, args.lam)
    B = args.B if args.B is not None else reconstruction_B(p, args.lam)
    Ndim = args.Ndim if args.Ndim is not None else effective_dim_class(p, args.lam)
    rep = theorem1_bound(inp, A, B, Ndim, args.t_norm)
    report.row("term_name", "value")
    for name, value in rep.rows():
        report.row(name, value)
    report.row("constraint", "satisfied", "margin", "kind")
    for c in rep.constraints:
        report.row(c.name, c.satisfied, c.margin, "proxy" if c.proxy else "exact")


def cmd_rates(args, report):
    rows = rate_table(args.a, args.b, args.c, args.h)
    report.row("row", "convergence", "dominance", "rate", "n_exponent", "log_exponent", "lambda")
    for r in rows:
        lam = lambda_schedule(r.row, args.N, args.a, args.b, args.c, args.h) if args.N else None
        report.row(r.row, r.convergence, r.dominance, r.rate, r.n_exponent, r.log_exponent, lam)


def cmd_concentration(args, report):
    base = _base_kernel(args)
    rng = derive_rng(args.seed, "cli-support")
    support = rng.uniform(-1, 1, size=(args.support_size, args.dim))
    if args.base != "gaussian":
        support *= args.radius_bound / np.sqrt(args.dim)
    dist = DiscreteDistribution.uniform(support)
    rep = run_concentration(base, dist, args.N, args.trials, args.eps, args.seed)
    report.row("mean_deviation", "base_radius")
    report.row(rep.mean_deviation, rep.base_radius)
    report.row("epsilon", "violation_rate", "ceiling", "slack")
    for r in rep.rows():
        report.row(r["epsilon"], r["violation_rate"], r["ceiling"], r["slack"])


def cmd_rate_exp(args, report):
    cfg = RateExperimentConfig(
        N_grid=tuple(args.N_grid), a=args.a, b_assumed=args.b, c_assumed=args.c, h=args.h,
        row=args.row, lam_scale=args.lam_scale, base_bandwidth=args.bandwidth, reps=args.reps,
        target=args.target, noise_std=args.noise_std, n_test=args.n_test, seed=args.seed,
    )
    rep = run_rate_experiment(cfg)
    report.row("N", "l", "lambda", "test_mse", "excess_proxy")
    for r in rep.rows():
        report.row(r["N"], r["l"], r["lambda"], r["test_mse"], r["excess_proxy"])
    report.row("slope", "slope_se", "predicted_exponent")
    report.row(rep.slope, rep.slope_se, rep.predicted_exponent)


def cmd_entropy(args, report):
    base = _base_kernel(args)
    outer = _outer_kernel(args, base)
    s = run_entropy_task(args.dim, args.l_train, args.l_test, args.N, args.seed, base, outer,
                         args.lam_grid, args.folds)
    report.row("lambda", "train_rmse", "test_rmse", "baseline_rmse")
    report.row(s.lam, s.train_rmse, s.test_rmse, s.baseline_rmse)


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "bound": cmd_bound,
    "rates": cmd_rates,
    "concentration": cmd_concentration,
    "rate-exp": cmd_rate_exp,
    "entropy-demo": cmd_entropy,
}


def main(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    except DataError as exc:
        print(f"distreg: data error: {exc}", file=stderr)
        return EXIT_DATA
    try:
        report = Report(args)
        COMMANDS[args.command](args, report)
        report.emit(stdout)
    except (SolveError, ScheduleError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"distreg: numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (DataError, DimensionError, OSError) as exc:
        print(f"distreg: data error: {exc}", file=stderr)
        return EXIT_DATA
    except (ValueError, DistRegError) as exc:
        print(f"distreg: invalid parameter: {exc}", file=stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
