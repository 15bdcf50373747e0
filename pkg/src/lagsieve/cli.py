"""Command-line interface.

Every subcommand is a thin composition of library operations; no numerical
logic lives here.  Exit codes: 0 success, 1 validation problem (bad flags,
files, or configs), 2 numerical failure.
"""

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    fit_result_to_dict,
    load_exposure_model,
    load_generator_config,
    read_dataset,
    read_fit_result,
    read_laguerre_density,
    write_bootstrap_result,
    write_curve,
    write_dataset,
    write_json,
    write_study_report,
)
from .densities import parse_density
from .errors import LagsieveError, ValidationError
from .features import feature_report
from .fitting import FitOptions, fit, select_model
from .laguerre import best_approx
from .likelihood import QuadratureConfig
from .simulate import bootstrap_test, default_generator_config, run_study, sample_dataset

THREADS_ENV = "LAGSIEVE_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_fit_options(parser):
    parser.add_argument("--seed", type=int, default=0, help="master seed for random starts")
    parser.add_argument("--starts", type=int, default=5, help="random optimizer starts")
    parser.add_argument("--max-iters", type=int, default=2000)
    parser.add_argument("--nodes-t", type=int, default=64, help="outer quadrature nodes")
    parser.add_argument("--nodes-y", type=int, default=64, help="inner quadrature nodes")


def _fit_options(args):
    return FitOptions(
        n_starts=args.starts,
        max_iters=args.max_iters,
        seed=args.seed,
        quadrature=QuadratureConfig(nodes_t=args.nodes_t, nodes_y=args.nodes_y),
    )


def _parse_grid(text):
    """Parse 'A..BxC..D' into a row-major list of (m1, m2) cells."""
    try:
        part1, part2 = text.lower().split("x")
        lo1, hi1 = (int(v) for v in part1.split(".."))
        lo2, hi2 = (int(v) for v in part2.split(".."))
    except ValueError:
        raise ValidationError(f"bad grid {text!r}; expected e.g. 1..4x1..4") from None
    if lo1 > hi1 or lo2 > hi2 or lo1 < 0 or lo2 < 0:
        raise ValidationError(f"bad grid bounds in {text!r}")
    return [(m1, m2) for m1 in range(lo1, hi1 + 1) for m2 in range(lo2, hi2 + 1)]


def _parse_probs(text):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ValidationError(f"bad probability list {text!r}") from None


def _parse_range(text):
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValidationError(f"bad range {text!r}; expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise ValidationError(f"bad range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def build_parser():
    parser = _Parser(prog="lagsieve", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lagsieve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a transmission-pair dataset")
    p.add_argument("--config", help="generator config file (defaults built in)")
    p.add_argument("--n", type=int, help="number of pairs (overrides config)")
    p.add_argument("--seed", type=int, help="generator seed (overrides config)")
    p.add_argument("--out", required=True, help="output dataset CSV")

    p = sub.add_parser("fit", help="fit delay densities to a dataset")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--model", required=True, help="exposure-model config file")
    p.add_argument("--m1", type=int, required=True, help="incubation degree")
    p.add_argument("--m2", type=int, required=True, help="generation degree")
    p.add_argument("--out", required=True, help="output fit JSON")
    _add_fit_options(p)

    p = sub.add_parser("select", help="BIC model selection over a degree grid")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--grid", default="1..4x1..4", help="degree grid, e.g. 1..4x1..4")
    p.add_argument("--out", required=True, help="output BIC table CSV")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_fit_options(p)

    p = sub.add_parser("features", help="report features of a fitted model")
    p.add_argument("--fit", required=True, help="fit JSON")
    p.add_argument("--growth-rate", type=float, required=True,
                   help="exponential growth rate of expected incidence (per day)")
    p.add_argument("--probs", default="0.3,0.5,0.7,0.9")
    p.add_argument("--out", help="optional output JSON")

    p = sub.add_parser("study", help="Monte-Carlo simulation study")
    p.add_argument("--config", help="generator config file (defaults built in)")
    p.add_argument("--n", type=int, help="pairs per replication (overrides config)")
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--growth-rate", type=float, default=math.log(2.0) / 5.0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_fit_options(p)

    p = sub.add_parser("test", help="parametric bootstrap goodness-of-fit test")
    p.add_argument("--fit", required=True, help="observed fit JSON")
    p.add_argument("--h0-i", required=True, help="null incubation density, e.g. lognormal:1.644,0.363")
    p.add_argument("--h0-g", required=True, help="null generation density, e.g. weibull:2.826,5.665")
    p.add_argument("--config", help="generator config for the null simulation")
    p.add_argument("--n", type=int, help="pairs per simulated dataset")
    p.add_argument("--sims", type=int, required=True)
    p.add_argument("--out", help="optional output JSON")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_fit_options(p)

    p = sub.add_parser("approx", help="best coefficient-vector approximation of a density")
    p.add_argument("--density", required=True, help="density descriptor, e.g. weibull:2.826,5.665")
    p.add_argument("--m", type=int, required=True, help="polynomial degree")
    p.add_argument("--refine", action="store_true", help="polish by direct distance minimization")
    p.add_argument("--out", required=True, help="output coefficient JSON")

    p = sub.add_parser("curve", help="tabulate density and cdf on a grid")
    p.add_argument("--theta", required=True, help="coefficient JSON (as written by approx/fit)")
    p.add_argument("--range", dest="grid", default="0:20:0.05", help="start:stop:step")
    p.add_argument("--out", required=True, help="output CSV")

    return parser


def _cmd_simulate(args):
    if args.config:
        config = load_generator_config(args.config, n=args.n, seed=args.seed)
    else:
        if args.n is None:
            raise ValidationError("--n is required when no config file is given")
        config = default_generator_config(n=args.n, seed=args.seed or 0)
    observations = sample_dataset(config)
    meta = {"seed": config.seed, **{f"config.{k}": v for k, v in sorted(config.echo().items())}}
    write_dataset(args.out, observations, meta=meta)
    print(f"wrote {len(observations)} observations to {args.out}")
    return 0


def _cmd_fit(args):
    data = read_dataset(args.data)
    exposure = load_exposure_model(args.model)
    options = _fit_options(args)
    result = fit(data, exposure, args.m1, args.m2, options)
    write_json(args.out, fit_result_to_dict(result, options))
    print(f"loglik = {result.loglik:.6f}  bic = {result.bic:.6f}  -> {args.out}")
    return 0


def _cmd_select(args):
    data = read_dataset(args.data)
    exposure = load_exposure_model(args.model)
    options = _fit_options(args)
    selection = select_model(data, exposure, _parse_grid(args.grid), options,
                             threads=args.threads)
    lines = ["m1,m2,loglik,bic,error"]
    for (m1, m2), cell in sorted(selection.table.items()):
        loglik = "" if cell.loglik is None else repr(cell.loglik)
        bic_value = "" if cell.bic is None else repr(cell.bic)
        lines.append(f"{m1},{m2},{loglik},{bic_value},{cell.error or ''}")
    header = [f"# lagsieve {__version__}", f"# seed = {args.seed}",
              f"# chosen = {selection.best[0]},{selection.best[1]}"]
    Path(args.out).write_text("\n".join(header + lines) + "\n")
    print(f"chosen cell: m1={selection.best[0]} m2={selection.best[1]}  -> {args.out}")
    return 0


def _cmd_features(args):
    result, _ = read_fit_result(args.fit)
    report = feature_report(result, args.growth_rate, _parse_probs(args.probs))
    print(f"reproduction number     {report.reproduction_number:.6f}")
    print(f"growth rate (per day)   {report.growth_rate:.6f}")
    print(f"P(pre-symptomatic)      {report.presymptomatic_probability:.6f}")
    print("quantile   incubation   generation")
    for p in sorted(report.incubation_quantiles):
        print(
            f"  {p:5.2f}   {report.incubation_quantiles[p]:10.4f}"
            f"   {report.generation_quantiles[p]:10.4f}"
        )
    if args.out:
        payload = report.to_dict()
        payload.update({"tool": "lagsieve", "version": __version__, "fit": args.fit})
        write_json(args.out, payload)
    return 0


def _cmd_study(args):
    if args.config:
        config = load_generator_config(args.config, n=args.n, seed=args.seed)
    else:
        if args.n is None:
            raise ValidationError("--n is required when no config file is given")
        config = default_generator_config(n=args.n, seed=args.seed or 0)
    options = _fit_options(args)
    report = run_study(
        config, args.m1, args.m2, args.reps, args.growth_rate,
        options=options, threads=args.threads,
    )
    path = write_study_report(args.out, report, meta={"seed": config.seed})
    summaries = report.summaries()
    med = summaries["hellinger_sq_generation"]["q50"]
    print(f"{len(report.rows)}/{args.reps} replications fitted "
          f"(median generation hellinger_sq = {med:.4f})  -> {path}")
    return 0


def _cmd_test(args):
    result, _ = read_fit_result(args.fit)
    if args.config:
        config = load_generator_config(args.config, n=args.n, seed=args.seed)
    else:
        n = args.n or result.n_obs
        if n < 1:
            raise ValidationError("--n is required when the fit records no sample size")
        config = default_generator_config(n=n, seed=args.seed or 0)
    outcome = bootstrap_test(
        result, parse_density(args.h0_i), parse_density(args.h0_g),
        result.m_incubation, result.m_generation, config, args.sims,
        options=_fit_options(args), threads=args.threads,
    )
    print(f"observed hellinger_sq: incubation = {outcome.observed_incubation:.6g}, "
          f"generation = {outcome.observed_generation:.6g}")
    print(f"p-values (add-one): incubation = {outcome.p_incubation:.4f}, "
          f"generation = {outcome.p_generation:.4f}, joint = {outcome.p_joint:.4f}")
    if outcome.n_failed:
        print(f"warning: {outcome.n_failed} simulation fits failed and were excluded")
    if args.out:
        extra = {
            "tool": "lagsieve", "version": __version__,
            "seed": args.seed, "config": config.echo(),
            "h0_incubation": args.h0_i, "h0_generation": args.h0_g,
        }
        write_bootstrap_result(args.out, outcome, extra=extra, meta={"seed": args.seed})
    return 0


def _cmd_approx(args):
    density = parse_density(args.density)
    approx = best_approx(density, args.m, refine=args.refine)
    payload = approx.to_dict()
    payload.update({"tool": "lagsieve", "version": __version__, "source": args.density})
    write_json(args.out, payload)
    print(f"theta = {np.array2string(approx.theta, precision=6)}  -> {args.out}")
    return 0


def _cmd_curve(args):
    density = read_laguerre_density(args.theta)
    write_curve(args.out, density, _parse_range(args.grid), meta={"theta": args.theta})
    print(f"wrote curve table to {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "select": _cmd_select,
    "features": _cmd_features,
    "study": _cmd_study,
    "test": _cmd_test,
    "approx": _cmd_approx,
    "curve": _cmd_curve,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LagsieveError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
