"""zoo: horizons in M+ with large negative curvature"""

import argparse
from typing import List, Tuple

import numpy as np

from horizonlab.api.common import add_resolution_arguments, emit, load_field, run_config
from horizonlab.core.config import settings
from horizonlab.core.errors import InputError
from horizonlab.models.responses import ZooReport
from horizonlab.services.artifacts import write_csv
from horizonlab.services.horizon_zoo import density_demo, zoo_sweep
from horizonlab.services.sphere_field import ScalarField, get_grid
from horizonlab.utils.logger import cli_logger

ZOO_COLUMNS = ("n", "lambda_1", "negative_curvature", "lower_bound")


def _parse_ns(text: str) -> List[int]:
    try:
        ns = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError("--n expects a comma-separated list of integers", {"n": text})
    if not ns or any(n < 1 for n in ns):
        raise InputError("--n values must be positive", {"n": text})
    return ns


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "zoo",
        help="sweep w = v - alpha cos(n theta)/n over n",
        description=(
            "Certify alpha so that the perturbed metric stays in M+, then report lambda_1, "
            "the integral of the negative part of K and its lower bound for each n."
        ),
    )
    parser.add_argument("--alpha", type=float, default=0.25, help="perturbation amplitude in [0, 1) (default 0.25)")
    parser.add_argument("--n", dest="ns", default="8,16,32,64", help="comma-separated frequencies (default 8,16,32,64)")
    parser.add_argument("--v", dest="v", help="base metric JSON file (default: the round sphere)")
    parser.add_argument("--target", type=float, help="also find the first doubled n whose negative curvature reaches this value")
    parser.add_argument("--csv", help="dump (n, lambda_1, negative curvature, bound)")
    parser.add_argument("--out", help="write the ZooReport here instead of stdout")
    add_resolution_arguments(parser)
    parser.set_defaults(handler=zoo)


def zoo(args: argparse.Namespace) -> Tuple[ZooReport, bool]:
    ns = _parse_ns(args.ns)
    if args.v:
        v = load_field(args, "v")
    else:
        v = ScalarField.constant(get_grid(settings.bandlimit, zonal=True), 0.0)

    if args.target is not None:
        found = density_demo(v, args.target, args.alpha)
        cli_logger.info(f"Negative curvature {args.target} reached at n={found.n}, alpha={found.alpha:.6g}")
        if found.n not in ns:
            ns.append(found.n)

    report = zoo_sweep(v, args.alpha, sorted(ns))
    report.config = run_config(args, metric_path=args.v, out_path=args.out, csv_path=args.csv)

    if args.csv:
        rows = np.array([[r.n, r.lambda_1, r.negative_curvature, r.lower_bound] for r in report.rows])
        write_csv(args.csv, ZOO_COLUMNS, rows)
    emit(report, args.out)

    passed = all(r.lambda_1 > 0 and r.negative_curvature >= r.lower_bound for r in report.rows)
    for row in report.rows:
        cli_logger.info(f"n={row.n}: lambda_1={row.lambda_1:.6g}, int K_- = {row.negative_curvature:.6g}, bound {row.lower_bound:.6g}")
    return report, passed
