"""Command line driver.

    torusband <stage> -c experiment.ini [-o OUTDIR]

Stages: gen-symbol, classical, spectrum2d, model1d, predict, compare,
rescheck.  Exit codes: 0 on success, 2 for configuration problems (bad or
missing files, keys, values), 3 for numerical failures (empty shells,
dimension caps, convergence, degenerate minima, truncation, or a probe
region outside the bound's hypotheses).
"""

import argparse
import sys

from . import __version__, reporting
from .config import ExperimentConfig
from .errors import (ConfigError, ConvergenceFailure, DegenerateMinimum,
                     DimensionCapExceeded, EmptyShell,
                     RegionViolatesHypotheses, TruncationTooSmall)

_NUMERICAL = (ConvergenceFailure, DegenerateMinimum, DimensionCapExceeded,
              EmptyShell, RegionViolatesHypotheses, TruncationTooSmall)

_STAGES = {
    "gen-symbol": reporting.run_gen_symbol,
    "classical": reporting.run_classical,
    "spectrum2d": reporting.run_spectrum,
    "model1d": reporting.run_model1d,
    "predict": reporting.run_predict,
    "compare": reporting.run_compare,
    "rescheck": reporting.run_rescheck,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torusband",
        description="Spectral band and eigenvalue-ladder experiments for "
                    "weakly damped wave operators on the 2-torus.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="stage", required=True)
    helps = {
        "gen-symbol": "generate or copy a symbol and write its coefficients",
        "classical": "limit intervals, torus averages, and their figure data",
        "spectrum2d": "assemble and diagonalize the operator on a mode shell",
        "model1d": "low-lying spectrum of a 1-d damped model",
        "predict": "eigenvalue lattice predicted at a band edge",
        "compare": "match a predicted lattice against a computed spectrum",
        "rescheck": "probe the rescaled resolvent lower bound",
    }
    for name in _STAGES:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("-c", "--config", required=True,
                       help="INI experiment file")
        p.add_argument("-o", "--output", default=None,
                       help="output directory (else [output] dir, under "
                            "TORUSBAND_OUT when set)")
        if name == "spectrum2d":
            p.add_argument("--workers", type=int, default=1,
                           help="parallel eigensolves over the epsilon list")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.stage == "spectrum2d":
            paths = _STAGES[args.stage](cfg, out_override=args.output,
                                        workers=args.workers)
        else:
            paths = _STAGES[args.stage](cfg, out_override=args.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
