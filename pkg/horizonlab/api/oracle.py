"""oracle: closed-form checks of every curvature formula and eigen solver"""

import argparse
import math
import sys
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from horizonlab.api.common import run_config
from horizonlab.core.config import settings
from horizonlab.core.constants import CROKE_AREA, CROKE_LATTICE_SYSTOLE, CROKE_SIDE, FOUR_PI
from horizonlab.core.errors import InputError
from horizonlab.models.responses import OracleReport, OracleResult
from horizonlab.services.artifacts import write_json
from horizonlab.services.collar import block_scalar_curvature, warped_terms
from horizonlab.services.extension import hawking_mass
from horizonlab.services.hoop_systole import build_cone_surface, lattice_systole, round_sphere_ratio
from horizonlab.services.metric_path import build_path
from horizonlab.services.profiles import (
    Profile,
    scalar_curvature_1d,
    schwarzschild_arclength,
    schwarzschild_exact,
    schwarzschild_profile,
    schwarzschild_radius,
)
from horizonlab.services.sphere_field import ConformalMetric, ScalarField, get_grid, random_field, total_curvature
from horizonlab.services.stability import first_eigenpair
from horizonlab.utils.logger import cli_logger

# name -> (value, expected, tolerance)
Check = Callable[[], Tuple[float, float, float]]

ORACLES: Dict[str, Check] = {}
FULL_ONLY = set()


def oracle(name: str, full_only: bool = False):
    def decorator(func: Check) -> Check:
        ORACLES[name] = func
        if full_only:
            FULL_ONLY.add(name)
        return func

    return decorator


def _cos_theta(L: int, amplitude: float = 0.5) -> ScalarField:
    return ScalarField.from_function(get_grid(L, zonal=True), lambda theta, phi: amplitude * np.cos(theta))


# ----------------------------------------------------------------------
# eigenvalues and Gauss-Bonnet
# ----------------------------------------------------------------------


@oracle("round_lambda_1")
def _round_lambda():
    w = ScalarField.constant(get_grid(settings.bandlimit, zonal=True), 0.0)
    return first_eigenpair(ConformalMetric(w)).lambda_, 1.0, 1e-8


@oracle("eigenvalue_scaling")
def _scaling():
    """max over c of |exp(2c) lambda(w + c) - lambda(w)|"""
    w = _cos_theta(settings.bandlimit)
    base = first_eigenpair(ConformalMetric(w)).lambda_
    worst = max(
        abs(math.exp(2.0 * c) * first_eigenpair(ConformalMetric(w + c)).lambda_ - base) for c in (-1.0, 0.5, 2.0)
    )
    return worst, 0.0, 1e-9


@oracle("gauss_bonnet")
def _gauss_bonnet():
    rng = np.random.default_rng(settings.seed)
    grid = get_grid(min(settings.bandlimit, 16))
    worst = max(abs(total_curvature(ConformalMetric(random_field(grid, rng))) - FOUR_PI) for _ in range(20))
    return worst, 0.0, 1e-8


# ----------------------------------------------------------------------
# curvature formulas
# ----------------------------------------------------------------------


@oracle("profile_flat")
def _profile_flat():
    s = np.linspace(0.1, 10.0, 1001)
    R = scalar_curvature_1d(Profile(s, s, np.ones_like(s), np.zeros_like(s)))
    return float(np.max(np.abs(R))), 0.0, 1e-12


@oracle("profile_round")
def _profile_round():
    s = np.linspace(0.1, math.pi - 0.1, 1001)
    R = scalar_curvature_1d(Profile(s, np.sin(s), np.cos(s), -np.sin(s)))
    return float(np.max(np.abs(R - 6.0))), 0.0, 1e-10


@oracle("profile_schwarzschild")
def _profile_schwarzschild():
    worst = 0.0
    for m in (0.5, 1.0, 2.0):
        R = scalar_curvature_1d(schwarzschild_profile(m, 20.0 * m))
        worst = max(worst, float(np.max(np.abs(R))))
    return worst, 0.0, 1e-8


@oracle("schwarzschild_arclength_inverse")
def _arclength_inverse():
    worst = 0.0
    for m in (0.5, 1.0, 2.0):
        u = np.linspace(2.0 * m, 200.0 * m, 2001)
        worst = max(worst, float(np.max(np.abs(schwarzschild_radius(m, schwarzschild_arclength(m, u)) - u) / u)))
    return worst, 0.0, 1e-10


@oracle("block_round")
def _block_round():
    t = np.linspace(0.05, math.pi - 0.05, 1001)
    R = block_scalar_curvature(**warped_terms(np.sin(t), np.cos(t), -np.sin(t)))
    return float(np.max(np.abs(R - 6.0))), 0.0, 1e-6


@oracle("block_flat")
def _block_flat():
    t = np.linspace(0.05, 5.0, 1001)
    R = block_scalar_curvature(**warped_terms(t, np.ones_like(t), np.zeros_like(t)))
    return float(np.max(np.abs(R))), 0.0, 1e-6


@oracle("block_schwarzschild")
def _block_schwarzschild():
    worst = 0.0
    for m in (0.5, 1.0, 2.0):
        u, du, ddu = schwarzschild_exact(m)(np.linspace(0.0, 20.0 * m, 1001))
        worst = max(worst, float(np.max(np.abs(block_scalar_curvature(**warped_terms(u, du, ddu))))))
    return worst, 0.0, 1e-6


# ----------------------------------------------------------------------
# masses and the flat Croke model
# ----------------------------------------------------------------------


@oracle("hawking_mass_unit_sphere")
def _hawking():
    return hawking_mass(FOUR_PI), 0.5, 1e-15


@oracle("round_hoop_ratio")
def _round_ratio():
    return round_sphere_ratio(), math.pi, 1e-14


@oracle("croke_area")
def _croke_area():
    return build_cone_surface().area, CROKE_AREA, 1e-12


@oracle("croke_cone_distance")
def _croke_cone_distance():
    distances = build_cone_surface().cone_distances()
    return float(max(abs(d - CROKE_SIDE) for d in distances)), 0.0, 1e-12


@oracle("croke_lattice_systole")
def _croke_systole():
    return lattice_systole(build_cone_surface()), CROKE_LATTICE_SYSTOLE, 1e-12


# ----------------------------------------------------------------------
# metric path
# ----------------------------------------------------------------------


@oracle("path_area_constancy", full_only=True)
def _path_area():
    path = build_path(_cos_theta(settings.bandlimit), n_time=settings.n_time, with_eigen=False)
    return path.area_residual(), 0.0, 1e-4


@oracle("path_boundary", full_only=True)
def _path_boundary():
    path = build_path(_cos_theta(settings.bandlimit), n_time=settings.n_time, with_eigen=False)
    return path.boundary_residual(), 0.0, 1e-6


def run_oracles(names: List[str]) -> List[OracleResult]:
    results = []
    for name in names:
        start_time = time.time()
        try:
            value, expected, tolerance = ORACLES[name]()
            passed = bool(abs(value - expected) <= tolerance)
        except Exception as e:
            cli_logger.error(f"Oracle {name} raised: {str(e)}")
            value, expected, tolerance, passed = math.nan, math.nan, math.nan, False
        cli_logger.debug(f"Oracle {name} finished in {time.time() - start_time:.2f}s")
        results.append(OracleResult(name=name, passed=passed, value=value, expected=expected, tolerance=tolerance))
    return results


def format_table(results: List[OracleResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'oracle':<{width}}  {'result':<6}  {'value':>24}  {'expected':>24}  {'tolerance':>9}"]
    for r in results:
        lines.append(
            f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.value:>24.17g}  {r.expected:>24.17g}  {r.tolerance:>9.1e}"
        )
    return "\n".join(lines)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "oracle",
        help="run the curvature and eigenvalue oracle suites",
        description="Print a pass/fail table; exit status 2 when any oracle fails.",
    )
    parser.add_argument("--quick", action="store_true", help="skip the metric-path oracles")
    parser.add_argument("--only", help="comma-separated oracle names")
    parser.add_argument("--json", help="write the OracleReport here")
    parser.add_argument("--bandlimit", type=int, help=f"bandlimit of the spectral oracles (default {settings.bandlimit})")
    parser.add_argument("--n-time", dest="n_time", type=int, help=f"time nodes of the metric-path oracles (default {settings.n_time})")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> Tuple[OracleReport, bool]:
    names = [n for n in ORACLES if not (args.quick and n in FULL_ONLY)]
    if args.only:
        wanted = [n.strip() for n in args.only.split(",") if n.strip()]
        unknown = [n for n in wanted if n not in ORACLES]
        if unknown:
            raise InputError("unknown oracle", {"names": unknown, "available": sorted(ORACLES)})
        names = wanted

    cli_logger.info(f"Running {len(names)} oracles", extra={"config": run_config(args).model_dump()})
    results = run_oracles(names)
    report = OracleReport(seed=settings.seed, results=results, passed=all(r.passed for r in results))

    sys.stdout.write(format_table(results) + "\n")
    if args.json:
        write_json(args.json, report)
    return report, report.passed
