"""check-mplus: stability eigenvalue and M+ certificates of a conformal metric"""

import argparse
import time
from typing import Tuple

from horizonlab.api.common import add_resolution_arguments, emit, load_field, run_config
from horizonlab.core.config import settings
from horizonlab.models.responses import MembershipReport
from horizonlab.services.extension import hawking_mass
from horizonlab.services.sphere_field import ConformalMetric, area
from horizonlab.services.stability import (
    certificate_from_eigenpair,
    eigenvalue_certificate,
    first_eigenpair,
    gradient_bound_test,
    membership_tolerance,
)
from horizonlab.utils.logger import cli_logger


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "check-mplus",
        help="decide whether exp(2w) g* has positive stability eigenvalue",
        description=(
            "Solve for the first eigenpair of -Delta_g + K_g and report M+ certificates. "
            "Exit status 2 when the metric is not in M+."
        ),
    )
    parser.add_argument("--metric", required=True, help="metric JSON file (conformal form)")
    parser.add_argument("--tol", dest="membership_tol", type=float, help=f"relative membership tolerance (default {settings.membership_tol})")
    parser.add_argument("--out", help="write the MembershipReport here instead of stdout")
    add_resolution_arguments(parser)
    parser.set_defaults(handler=check_mplus)


def check_mplus(args: argparse.Namespace) -> Tuple[MembershipReport, bool]:
    """Eigenvalue test plus the certificates that apply"""
    cli_logger.info(f"Checking M+ membership of {args.metric}")
    start_time = time.time()

    w = load_field(args)
    g = ConformalMetric(w)
    pair = first_eigenpair(g)
    tol = membership_tolerance(g)
    in_m_plus = pair.lambda_ > tol

    certificates = [eigenvalue_certificate(g, pair)]
    gradient = gradient_bound_test(w)
    if gradient is not None:
        certificates.append(gradient)
    if in_m_plus:
        certificates.append(certificate_from_eigenpair(g, pair))

    total = area(g)
    report = MembershipReport(
        seed=settings.seed,
        config=run_config(args, metric_path=args.metric, out_path=args.out),
        area=total,
        hawking_mass=hawking_mass(total),
        in_m_plus=in_m_plus,
        tolerance=tol,
        eigen=pair.to_summary(),
        certificates=[c.to_record() for c in certificates],
    )
    emit(report, args.out)

    cli_logger.info(
        f"lambda_1 = {pair.lambda_:.12g}, in M+: {in_m_plus}",
        extra={"duration_seconds": round(time.time() - start_time, 2)},
    )
    return report, in_m_plus
