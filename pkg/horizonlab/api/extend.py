"""extend and bartnik: scalar-positive extensions with a Schwarzschild end"""

import argparse
import time
from typing import Tuple

from horizonlab.api.common import add_resolution_arguments, emit, load_field, run_config
from horizonlab.core.config import settings
from horizonlab.models.responses import BartnikEstimate, ExtensionReport
from horizonlab.services.artifacts import parse_mass, write_csv
from horizonlab.services.collar import collar_report
from horizonlab.services.extension import (
    ExtensionManifold,
    ExtensionOptions,
    bartnik_mass_estimate,
    build_extension,
    hawking_mass,
    verify,
)
from horizonlab.services.profiles import profile_table
from horizonlab.services.sphere_field import ConformalMetric, area
from horizonlab.utils.logger import cli_logger

PROFILE_COLUMNS = ("s", "f", "df", "ddf", "R", "psc_margin", "H")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "extend",
        help="build and verify an extension of mass m",
        description=(
            "Metric path, collar, bent Schwarzschild neck and exact Schwarzschild tail. "
            "Exit status 2 when a verification flag fails, 3 when m is at or below the Hawking mass."
        ),
    )
    parser.add_argument("--metric", required=True, help="metric JSON file (conformal form)")
    parser.add_argument("--mass", required=True, help="ADM mass: absolute (0.55) or a multiple of the Hawking mass (1.05x)")
    parser.add_argument("--out", help="write the ExtensionReport here instead of stdout")
    parser.add_argument("--neck-csv", dest="neck_csv", help="dump the neck profile (s, f, f', f'', R, psc_margin, H)")
    parser.add_argument("--totally-geodesic", dest="totally_geodesic", action="store_true", help="also check that the boundary is totally geodesic")
    parser.add_argument("--epsilon-cap", dest="epsilon_cap", type=float, help=f"upper bound on the collar epsilon (default {settings.collar_epsilon_cap})")
    add_resolution_arguments(parser, time_nodes=True)
    parser.set_defaults(handler=extend)

    parser = subparsers.add_parser(
        "bartnik",
        help="bracket the smallest mass with a verified extension",
        description="Bisection on m in (m_H, 2 m_H]; every trial is a full extend run.",
    )
    parser.add_argument("--metric", required=True, help="metric JSON file (conformal form)")
    parser.add_argument("--rel-tol", dest="rel_tol", type=float, default=0.05, help="stop once the bracket is below rel_tol * m_H (default 0.05)")
    parser.add_argument("--out", help="write the BartnikEstimate here instead of stdout")
    parser.add_argument("--epsilon-cap", dest="epsilon_cap", type=float, help=f"upper bound on the collar epsilon (default {settings.collar_epsilon_cap})")
    add_resolution_arguments(parser, time_nodes=True)
    parser.set_defaults(handler=bartnik)


def _options(args: argparse.Namespace) -> ExtensionOptions:
    return ExtensionOptions(
        totally_geodesic=getattr(args, "totally_geodesic", False),
        n_time=settings.n_time,
        epsilon_cap=settings.collar_epsilon_cap,
    )


def extension_report(ext: ExtensionManifold, args: argparse.Namespace) -> ExtensionReport:
    return ExtensionReport(
        seed=settings.seed,
        config=run_config(args, metric_path=args.metric, out_path=args.out, csv_path=args.neck_csv),
        mass=ext.mass,
        area=ext.area,
        T=ext.T,
        rho=ext.rho,
        s0=ext.s0,
        delta=ext.delta,
        epsilon_star=ext.epsilon_star,
        bend_amplitude=float(ext.bent.params.get("amplitude", settings.bend_amplitude)),
        glue_width=float(ext.neck.params.get("eta", 0.0)),
        path=ext.path.summary(),
        collar=collar_report(ext.collar),
        verification=verify(ext),
    )


def extend(args: argparse.Namespace) -> Tuple[ExtensionReport, bool]:
    cli_logger.info(f"Extending {args.metric} with mass {args.mass}")
    start_time = time.time()

    w = load_field(args)
    m = parse_mass(args.mass, hawking_mass(area(ConformalMetric(w))))
    ext = build_extension(w, m, _options(args))
    report = extension_report(ext, args)

    if args.neck_csv:
        write_csv(args.neck_csv, PROFILE_COLUMNS, profile_table(ext.neck))
    emit(report, args.out)

    passed = report.verification.passed
    cli_logger.info(
        f"Extension of mass {m:.12g} {'verified' if passed else 'failed verification'}",
        extra={"duration_seconds": round(time.time() - start_time, 2)},
    )
    return report, passed


def bartnik(args: argparse.Namespace) -> Tuple[BartnikEstimate, bool]:
    cli_logger.info(f"Bartnik mass estimate for {args.metric}")
    w = load_field(args)
    estimate = bartnik_mass_estimate(w, rel_tol=args.rel_tol, options=_options(args))
    estimate.config = run_config(args, metric_path=args.metric, out_path=args.out)
    emit(estimate, args.out)
    cli_logger.info(f"Bartnik bracket [{estimate.lower:.12g}, {estimate.upper:.12g}] after {len(estimate.trials)} trials")
    return estimate, True
