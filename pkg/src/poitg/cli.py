"""Command-line front end: ``poitg {fit,eval,sample,summary}``."""

import argparse
import json
import math
import sys

import numpy as np

from . import dist
from .data import CountFileError, read_counts
from .dist import Params
from .em import fit_em
from .estimate import PARAM_NAMES, fit_mle
from .special import DomainError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3

N_PARAMS = 3


def _fmt(x, digits=6):
    return f"{x:.{digits}g}"


def _emit(text, output):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _params(args):
    return Params(args.lam, args.q, args.alpha)


def fit_report(fit):
    """JSON-ready dict for a fit; keys are stable."""
    est = dict(zip(PARAM_NAMES, fit.params.as_tuple()))
    se = fit.se
    ci = None
    if fit.ci is not None:
        ci = {"level": fit.level}
        ci.update({name: [iv.lower, iv.upper] for name, iv in fit.ci.items()})
        ci["clipped"] = [name for name, iv in fit.ci.items() if iv.clipped]
    return {
        "model": "poitg",
        "n": fit.n,
        "method": fit.method,
        "estimates": est,
        "se": None if se is None else {k: float(v) for k, v in se.items()},
        "ci": ci,
        "loglik": fit.loglik,
        "aic": 2 * N_PARAMS - 2 * fit.loglik,
        "bic": N_PARAMS * math.log(fit.n) - 2 * fit.loglik,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "boundary": list(fit.boundary),
    }


def cmd_fit(args):
    try:
        data = read_counts(args.input)
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CountFileError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        if args.method == "mle":
            fit = fit_mle(
                data,
                tol=args.tol if args.tol is not None else 1e-8,
                max_iter=args.max_iter if args.max_iter is not None else 2000,
                multistart=args.multistart,
                level=args.ci,
            )
        else:
            fit, _ = fit_em(
                data,
                eps=args.tol if args.tol is not None else 1e-4,
                max_iter=args.max_iter if args.max_iter is not None else 500,
                level=args.ci,
            )
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(json.dumps(fit_report(fit), indent=2) + "\n", args.output)
    if not fit.converged:
        print("warning: optimizer did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def eval_rows(p, y_max):
    table = dist.pmf_table(p, y_max)
    for y in range(y_max + 1):
        survival = dist.sf(y, p)
        yield y, table[y], dist.cdf(y, p), survival, table[y] / survival


def cmd_eval(args):
    p = _params(args)
    if args.y_max < 0:
        raise DomainError("--y-max must be non-negative")
    lines = ["y,pmf,cdf,sf,hazard"]
    for y, *values in eval_rows(p, args.y_max):
        lines.append(",".join([str(y)] + [_fmt(v, args.digits) for v in values]))
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_sample(args):
    p = _params(args)
    draws = dist.sample(p, args.n, rng=np.random.default_rng(args.seed))
    _emit("".join(f"{v}\n" for v in draws.counts), args.output)
    return EXIT_OK


def summary_report(p):
    m = dist.moments(p)
    return {
        "model": "poitg",
        "params": dict(zip(PARAM_NAMES, p.as_tuple())),
        "mean": m.mean,
        "variance": m.variance,
        "raw_moments": dict(zip(("m1", "m2", "m3", "m4"), m.raw)),
        "central_moments": dict(zip(("mu2", "mu3", "mu4"), m.central[1:])),
        "skewness": m.skewness,
        "kurtosis": m.kurtosis,
        "dispersion_index": m.dispersion_index,
        "cv_percent": m.cv_percent,
    }


def cmd_summary(args):
    _emit(json.dumps(summary_report(_params(args)), indent=2) + "\n", args.output)
    return EXIT_OK


def _add_params(sub):
    sub.add_argument("--lambda", dest="lam", type=float, required=True)
    sub.add_argument("--q", type=float, required=True)
    sub.add_argument("--alpha", type=float, required=True)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poitg", description="Poisson-transmuted geometric count model toolkit"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="estimate parameters from a count file")
    fit.add_argument("--input", required=True)
    fit.add_argument("--method", choices=("mle", "em"), default="mle")
    fit.add_argument("--tol", type=float, help="simplex tolerance (mle) or eps (em)")
    fit.add_argument("--max-iter", type=int)
    fit.add_argument("--ci", type=float, default=0.95, help="confidence level")
    fit.add_argument("--multistart", action="store_true")
    fit.add_argument("--output")
    fit.set_defaults(func=cmd_fit)

    ev = subs.add_parser("eval", help="tabulate pmf, cdf, sf and hazard")
    _add_params(ev)
    ev.add_argument("--y-max", type=int, default=20)
    ev.add_argument("--digits", type=int, default=6)
    ev.add_argument("--output")
    ev.set_defaults(func=cmd_eval)

    sm = subs.add_parser("sample", help="draw random counts")
    _add_params(sm)
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--seed", type=int)
    sm.add_argument("--output")
    sm.set_defaults(func=cmd_sample)

    su = subs.add_parser("summary", help="moments and dispersion summaries")
    _add_params(su)
    su.add_argument("--output")
    su.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
