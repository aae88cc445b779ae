"""croke: the smoothed Croke surface against the hoop bound"""

import argparse
from typing import Tuple

import numpy as np

from horizonlab.api.common import emit, run_config
from horizonlab.core.config import settings
from horizonlab.models.responses import HoopReport
from horizonlab.services.artifacts import write_json
from horizonlab.services.hoop_systole import counterexample_report, smooth_caps
from horizonlab.services.sweepout import mesh_geodesic_search
from horizonlab.utils.logger import cli_logger


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "croke",
        help="certify the smoothed Croke surface as a hoop counterexample",
        description=(
            "Smooth the three cone points of two glued equilateral triangles, mesh the result, "
            "certify a lower bound for closed geodesics and compare it with 4 pi m."
        ),
    )
    parser.add_argument("--cap-radius", dest="cap_radius", type=float, help=f"cone radius replaced by each cap (default {settings.cap_radius})")
    parser.add_argument("--mass-factor", dest="mass_factor", type=float, default=1.02, help="m = factor * sqrt(area / 16 pi) (default 1.02)")
    parser.add_argument("--flat-edge", dest="flat_edge", type=float, help=f"target mesh edge away from the caps (default {settings.mesh_flat_edge})")
    parser.add_argument("--sweeps", type=int, help=f"random sweepouts in the empirical search (default {settings.sweep_count})")
    parser.add_argument("--no-search", dest="search", action="store_false", help="skip the empirical sweepout search")
    parser.add_argument("--mesh-out", dest="mesh_out", help="write the mesh JSON here")
    parser.add_argument("--report", help="write the HoopReport here instead of stdout")
    parser.set_defaults(handler=croke)


def croke(args: argparse.Namespace) -> Tuple[HoopReport, bool]:
    r0 = settings.cap_radius if args.cap_radius is None else args.cap_radius
    cli_logger.info(f"Building smoothed Croke surface with cap radius {r0}")
    surface = smooth_caps(r0, args.flat_edge)

    empirical = None
    if args.search:
        loop = mesh_geodesic_search(surface.mesh, args.sweeps, rng=np.random.default_rng(settings.seed))
        empirical = loop.length
        cli_logger.debug(f"Shortest loop from sweep direction {loop.direction.tolist()} after {loop.passes} passes")

    report = counterexample_report(surface, args.mass_factor, empirical_length=empirical, seed=settings.seed)
    report.config = run_config(args, mesh_path=args.mesh_out, out_path=args.report)

    if args.mesh_out:
        write_json(args.mesh_out, surface.mesh.to_record())
    emit(report, args.report)

    cli_logger.info(
        f"Certified length {report.certified_length:.6f} vs hoop bound {report.hoop_bound:.6f}; ratio {report.ratio:.6f}"
    )
    return report, report.passed
