"""Command-line front end.

Every verb writes one document (JSON by default, CSV with ``--format csv``)
to ``--output`` or stdout.  Exit status: 0 success, 2 input error,
3 numerical error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import io
from .errors import InputError, OneShotError
from .estimators import LinearConstraint, fit_mdpde, fit_restricted_mdpde
from .inference import dpd_test_statistic, rao_simple_statistic, rao_statistic
from .model import ModelParams, failure_probabilities
from .robustness import if_profile
from .sampling import largest_remainder_counts
from .simulation import (DEFAULT_EPSILONS, ContaminationSpec, contaminated_probabilities,
                         level_power_experiment, mse_curve, mse_experiment)

EXIT_CODES = {"input-error": 2, "numerical-error": 3, "non-convergence": 4, "error": 1}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error [input-error]: {message}\n")
        raise SystemExit(EXIT_CODES["input-error"])


def _pair(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oneshot-dpd",
                     description="Robust DPD inference for step-stress one-shot device tests.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--output", "-o", type=Path, help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        return p

    def data(p, beta=True):
        p.add_argument("--plan", type=Path, required=True)
        p.add_argument("--counts", type=Path, required=True)
        if beta:
            p.add_argument("--beta", type=_nonneg, required=True)

    def restriction(p):
        p.add_argument("--m", type=_pair, required=True, help="m0,m1")
        p.add_argument("--d", type=float, required=True)

    def params(p):
        p.add_argument("--theta0", type=float, required=True)
        p.add_argument("--theta1", type=float, required=True)

    p = common(sub.add_parser("probabilities", help="cell probabilities of the model"))
    p.add_argument("--plan", type=Path, required=True)
    params(p)
    p.add_argument("--cell", type=int, help="contaminated cell (2..L)")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--target", choices=("theta0", "theta1"), default="theta0")
    p.add_argument("--expected-counts", type=int, metavar="N",
                   help="emit largest-remainder counts for N devices instead")

    data(common(sub.add_parser("fit", help="unrestricted MDPDE")))
    p = common(sub.add_parser("fit-restricted", help="MDPDE under m.theta = d"))
    data(p)
    restriction(p)

    p = common(sub.add_parser("rao-test", help="Rao-type test of m.theta = d"))
    data(p)
    restriction(p)

    p = common(sub.add_parser("rao-simple", help="Rao-type test of theta = (theta0, theta1)"))
    data(p)
    params(p)

    p = common(sub.add_parser("dpd-test", help="DPD-based test with bootstrap calibration"))
    data(p)
    restriction(p)
    p.add_argument("--tau", type=float, help="divergence tuning parameter (default: beta)")
    p.add_argument("--boot", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = common(sub.add_parser("influence", help="influence function at every cell"))
    p.add_argument("--plan", type=Path, required=True)
    params(p)
    p.add_argument("--beta", type=_nonneg, required=True)
    p.add_argument("--m", type=_pair, help="restriction m0,m1 (restricted IF)")
    p.add_argument("--d", type=float)

    for verb, text in (("simulate-mse", "MSE of the restricted MDPDE"),
                       ("simulate-power", "empirical level/power of the Rao-type test")):
        p = common(sub.add_parser(verb, help=text))
        p.add_argument("--config", type=Path, required=True)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="override the config worker count")
        p.add_argument("--plot-data", type=Path, help="write the figure-analogue CSV here")
        if verb == "simulate-mse":
            p.add_argument("--epsilons", type=_float_list,
                           help="contamination grid for the plot data")
        else:
            p.add_argument("--sample-sizes", type=_float_list)
    return parser


def _restriction(args) -> LinearConstraint:
    return LinearConstraint(args.m, args.d)


def _run_probabilities(args):
    plan = io.load_plan(args.plan)
    params = ModelParams(args.theta0, args.theta1)
    if args.cell is not None:
        probs = contaminated_probabilities(
            params, plan, ContaminationSpec(args.cell, args.epsilon, args.target))
    else:
        probs = failure_probabilities(params, plan)
    if args.expected_counts is not None:
        counts = largest_remainder_counts(probs, args.expected_counts)
        if args.format == "csv":
            return io.counts_to_csv(counts)
        return io.dumps({"counts": counts.tolist(), "N": int(args.expected_counts)})
    if args.format == "csv":
        return io.rows_to_csv(("cell", "probability"),
                              [(j, float(v)) for j, v in enumerate(probs, start=1)])
    return io.dumps({"cells": list(range(1, probs.size + 1)),
                     "probabilities": probs.tolist()})


def _fit_doc(result, fmt):
    if fmt == "csv":
        e = result.estimate
        return io.rows_to_csv(("parameter", "estimate"),
                              [("theta0", e.theta0), ("theta1", e.theta1)])
    return io.dumps(result.to_dict())


def _outcome_doc(outcome, fmt):
    if fmt == "csv":
        return io.rows_to_csv(("statistic", "p_value"), [(outcome.statistic, outcome.p_value)])
    return io.dumps(outcome.to_dict())


def _run_fit(args):
    plan, counts = io.load_plan(args.plan), io.load_counts(args.counts)
    if args.verb == "fit":
        return _fit_doc(fit_mdpde(counts, plan, args.beta), args.format)
    return _fit_doc(fit_restricted_mdpde(counts, plan, args.beta, _restriction(args)),
                    args.format)


def _run_rao(args):
    plan, counts = io.load_plan(args.plan), io.load_counts(args.counts)
    if args.verb == "rao-test":
        outcome = rao_statistic(counts, plan, args.beta, _restriction(args))
    else:
        outcome = rao_simple_statistic(counts, plan, args.beta,
                                       ModelParams(args.theta0, args.theta1))
    return _outcome_doc(outcome, args.format)


def _run_dpd(args):
    plan, counts = io.load_plan(args.plan), io.load_counts(args.counts)
    outcome = dpd_test_statistic(counts, plan, args.beta, _restriction(args), tau=args.tau,
                                 n_boot=args.boot, seed=args.seed, workers=args.workers)
    return _outcome_doc(outcome, args.format)


def _run_influence(args):
    plan = io.load_plan(args.plan)
    if (args.m is None) != (args.d is None):
        raise InputError("--m and --d go together")
    constraint = _restriction(args) if args.m is not None else None
    profile = if_profile(ModelParams(args.theta0, args.theta1), plan, args.beta, constraint)
    rows = list(profile.rows())
    if args.format == "csv":
        return io.rows_to_csv(("cell", "if_theta0", "if_theta1", "norm"), rows)
    return io.dumps({
        "beta": args.beta,
        "constraint": None if constraint is None else constraint.to_dict(),
        "profile": [dict(zip(("cell", "if_theta0", "if_theta1", "norm"), r)) for r in rows],
        "max_norm": profile.max_norm,
    })


def _summary_doc(summary, fmt, config):
    if fmt == "csv":
        return summary.to_csv()
    return io.dumps({
        "seed": config.seed, "R": config.R, "alpha": config.alpha,
        "rows": [{"beta": r.beta, "N": r.N, "metric": r.metric, "value": r.value,
                  "failures": r.failures} for r in summary.rows],
    })


def _load_config(args):
    config, extras = io.load_config(args.config, args.workers)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config, extras


def _run_simulate(args):
    config, extras = _load_config(args)
    plot = None
    if args.verb == "simulate-mse":
        summary = mse_experiment(config)
        if args.plot_data is not None:
            eps = args.epsilons or extras.get("epsilons") or DEFAULT_EPSILONS
            curve = mse_curve(config, eps)
            plot = io.rows_to_csv(("epsilon", "beta", "mse"),
                                  [(r["epsilon"], r["beta"], r["mse"]) for r in curve])
    else:
        sizes = args.sample_sizes or extras.get("sample_sizes")
        sizes = [int(n) for n in sizes] if sizes else None
        summary = level_power_experiment(config, extras.get("alternative"), sizes)
        if args.plot_data is not None:
            plot = io.rows_to_csv(("N", "beta", "rate"),
                                  [(r.N, r.beta, r.value) for r in summary.rows])
    return _summary_doc(summary, args.format, config), plot


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


DISPATCH = {
    "probabilities": _run_probabilities,
    "fit": _run_fit,
    "fit-restricted": _run_fit,
    "rao-test": _run_rao,
    "rao-simple": _run_rao,
    "dpd-test": _run_dpd,
    "influence": _run_influence,
    "simulate-mse": _run_simulate,
    "simulate-power": _run_simulate,
}


def dispatch(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out = DISPATCH[args.verb](args)
    except OneShotError as exc:
        sys.stderr.write(f"error [{exc.category}]: {exc}\n")
        return EXIT_CODES.get(exc.category, 1)
    plot = None
    if isinstance(out, tuple):
        out, plot = out
    _write(args.output, out)
    if plot is not None:
        _write(args.plot_data, plot)
    return 0


def main(argv=None):
    raise SystemExit(dispatch(argv))


if __name__ == "__main__":
    main()
