"""Command-line entry point"""

import argparse
import json
import sys
from typing import List, Optional

from horizonlab import __version__
from horizonlab.api import check_mplus, croke, extend, oracle, zoo
from horizonlab.api.common import apply_overrides
from horizonlab.core.config import settings
from horizonlab.core.errors import EXIT_OK, EXIT_VERIFICATION, HorizonError, NumericalError
from horizonlab.models.responses import ErrorResponse
from horizonlab.utils.logger import cli_logger, set_level

EPILOG = """\
exit status:
  0  every check passed
  2  a verification flag failed (or the metric is not in M+)
  3  input error: malformed file, parameter out of range, mass at or below the Hawking mass
  4  numerical failure: solver, root-find or search did not converge

environment:
  HORIZON_NUM_THREADS  worker threads for independent solves (overridden by --threads)
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horizonlab",
        description="Scalar-positive extensions of apparent-horizon metrics on the 2-sphere",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="log verbosity on stderr")
    parser.add_argument("--threads", type=int, help="worker threads for independent solves")
    parser.add_argument("--seed", type=int, help=f"seed for randomized batteries (default {settings.seed})")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for module in (check_mplus, extend, zoo, croke, oracle):
        module.register(subparsers)
    return parser


def _report_error(error: ErrorResponse) -> None:
    sys.stderr.write(json.dumps(error.model_dump(), default=str) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.log_level:
        settings.log_level = args.log_level
        set_level(args.log_level)

    try:
        apply_overrides(args)
        cli_logger.info(f"Running {args.command}")
        _, passed = args.handler(args)
    except HorizonError as e:
        cli_logger.error(f"{args.command} failed: {e.message}")
        _report_error(ErrorResponse(**e.to_record()))
        return e.exit_code
    except (ArithmeticError, ValueError, MemoryError) as e:
        cli_logger.error(f"{args.command} failed with unexpected numerical error: {str(e)}", exc_info=True)
        failure = NumericalError(str(e), {"type": type(e).__name__})
        _report_error(ErrorResponse(**failure.to_record()))
        return failure.exit_code

    if not passed:
        cli_logger.warning(f"{args.command} finished with failing checks")
        return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
