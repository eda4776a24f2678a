# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Command-line front end.

Exit codes: 0 success, 1 numerical diagnostic, 2 input error,
3 acceptance regression.
"""

import argparse
import json
import sys

from . import __version__
from .config import LAWS, METHODS, load_config
from .exceptions import AcceptanceRegressionError, GraphonLQError, ValidationError
from .experiments import EXPERIMENTS, write_result
from .logger import get_logger, setup_logging

EXIT_OK = 0
EXIT_DIAGNOSTIC = 1
EXIT_INPUT = 2
EXIT_REGRESSION = 3

COMMAND_HELP = {
    "spectrum": "eigenvalues and eigenvectors of the step graphon or correlation operator",
    "riccati": "Riccati mode solutions on the time grid",
    "simulate": "Monte Carlo and exact costs of the feedback laws at one N",
    "converge": "graphon and noise discrepancies along the N ladder",
    "gap": "optimality gap of the decentralized law along the N ladder",
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value settings file")
    common.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    common.add_argument("--seed", type=int, help="root seed of the noise streams")
    common.add_argument("--replicas", type=int, help="Monte Carlo replicas")
    common.add_argument("--dt", type=float, help="simulation time step")
    common.add_argument("--N", dest="N", type=int, help="number of agents")
    common.add_argument("--law", choices=LAWS, help="feedback law(s) to simulate")
    common.add_argument("--method", choices=METHODS, help="cost evaluation of the gap")
    common.add_argument("--json", action="store_true", help="print a JSON summary to stdout")
    common.add_argument("--log-dir", metavar="DIR", help="also log to a rotating file here")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphon-lq",
        description="Centralized and decentralized LQ control on graphon networks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    common = _common_options()
    for name in EXPERIMENTS:
        subparsers.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "replicas": args.replicas,
        "dt": args.dt,
        "N": args.N,
        "law": args.law,
        "method": args.method,
        "output": args.out,
    }


def run(args) -> int:
    log = setup_logging(log_dir=args.log_dir, verbose=args.verbose)
    cfg, settings = load_config(args.config, _overrides(args))
    log.log_config(settings, title="Settings")
    log.log_experiment(args.command, {"config": args.config or "(defaults)", "seed": cfg.seed})

    result = EXPERIMENTS[args.command](cfg)
    write_result(result, cfg.output)
    if args.json:
        json.dump(result.summary, sys.stdout, sort_keys=True, default=float)
        sys.stdout.write("\n")
    if result.failure:
        raise AcceptanceRegressionError(result.failure)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ValidationError as e:
        print(f"graphon-lq: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except AcceptanceRegressionError as e:
        print(f"graphon-lq: regression: {e}", file=sys.stderr)
        return EXIT_REGRESSION
    except GraphonLQError as e:
        get_logger().exception(f"{args.command} failed: {e}")
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
