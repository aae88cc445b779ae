"""Helpers shared by the subcommand modules"""

import argparse
import sys
from typing import Optional

from pydantic import BaseModel

from horizonlab.core.config import settings
from horizonlab.models.requests import RunConfig
from horizonlab.services.artifacts import load_metric, write_json
from horizonlab.services.sphere_field import ScalarField, get_grid
from horizonlab.utils.logger import cli_logger

# argparse dest -> Settings field
OVERRIDES = {
    "bandlimit": "bandlimit",
    "n_time": "n_time",
    "membership_tol": "membership_tol",
    "epsilon_cap": "collar_epsilon_cap",
    "seed": "seed",
    "threads": "num_threads",
}


def add_resolution_arguments(parser: argparse.ArgumentParser, time_nodes: bool = False) -> None:
    parser.add_argument("--bandlimit", type=int, help=f"spectral bandlimit L (default: metric file, else {settings.bandlimit})")
    if time_nodes:
        parser.add_argument("--n-time", dest="n_time", type=int, help=f"Chebyshev time nodes along the metric path (default {settings.n_time})")


def apply_overrides(args: argparse.Namespace) -> None:
    """Copy CLI flags that were given onto the process settings"""
    for dest, name in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            setattr(settings, name, value)
            cli_logger.debug(f"Setting {name} overridden to {value}")


def run_config(args: argparse.Namespace, **paths: Optional[str]) -> RunConfig:
    """The resolved run parameters echoed into every report"""
    return RunConfig(
        subcommand=args.command,
        bandlimit=settings.bandlimit,
        n_time=settings.n_time,
        membership_tol=settings.membership_tol,
        collar_epsilon_cap=settings.collar_epsilon_cap,
        seed=settings.seed,
        num_threads=settings.num_threads,
        **paths,
    )


def load_field(args: argparse.Namespace, attribute: str = "metric") -> ScalarField:
    """Load w from the metric file, resampled when --bandlimit is given"""
    w = load_metric(getattr(args, attribute))
    if getattr(args, "bandlimit", None) is not None and args.bandlimit != w.grid.bandlimit:
        cli_logger.info(f"Resampling metric from L={w.grid.bandlimit} to L={args.bandlimit}")
        w = w.on(get_grid(args.bandlimit, zonal=w.is_zonal()))
    settings.bandlimit = w.grid.bandlimit
    return w


def emit(report: BaseModel, out_path: Optional[str]) -> None:
    """Write the report atomically, or print it when no path is given"""
    if out_path:
        write_json(out_path, report)
    else:
        sys.stdout.write(report.model_dump_json(by_alias=True, indent=2) + "\n")
