import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from .api.commands import (
    cmd_constants,
    cmd_eval,
    cmd_leray,
    cmd_validate,
    cmd_verify,
    load_config,
    render_summary,
    write_report,
)
from .config import settings
from .schemas.run import RunConfig, Variant
from .services.errors import DegenerateSymbol, FundsolError
from .utils.logging import setup_logging

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_ERROR = 3
EXIT_FAILED_CHECK = 4

COMMANDS: Dict[str, Callable] = {
    "validate": cmd_validate,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "constants": cmd_constants,
    "leray": cmd_leray,
}


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser; one flat flag namespace shared by every subcommand."""
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Fundamental solutions of real-principal-type homogeneous operators",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", type=Path, required=name != "constants", help="Run config (JSON)")
        sub.add_argument("--variant", choices=[v.value for v in Variant], help="Psi-variant of case B")
        sub.add_argument("--budget-scale", type=float, default=1.0, help="Scale every node-count budget")
        sub.add_argument("--out", type=Path, help="Output directory")
        sub.add_argument("--seed", type=int, help="Seed of the (H) sampling")
        sub.add_argument("--convergence", action="store_true", default=None, help="Budget-halving study (verify)")
        sub.add_argument("--log-level", default=None, help="Overrides FUNDSOL_LOG_LEVEL")
    return parser


def resolve_config(args: argparse.Namespace) -> Optional[RunConfig]:
    """Flags first, then the config file on top of them, then the budget scale."""
    if args.config is None:
        return None
    config = load_config(
        args.config,
        variant=args.variant,
        out=args.out,
        seed=args.seed,
        convergence=args.convergence,
    )
    if args.budget_scale != 1.0:
        config.budgets = config.budgets.scaled(args.budget_scale)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        config = resolve_config(args)
        report = COMMANDS[args.command](config)
    except DegenerateSymbol as e:
        logger.opt(exception=e).error(f"Hypothesis (H) fails: {e}")
        for direction in e.directions:
            logger.error(f"  offending direction {direction}")
        return EXIT_DEGENERATE
    except (FundsolError, ValidationError, OSError) as e:
        logger.opt(exception=e).error(f"{args.command} failed: {e}")
        return EXIT_ERROR

    out = (config.out if config is not None else None) or args.out or Path("out") / args.command
    write_report(report, out, args.command)
    print(render_summary(report))

    if args.command == "verify" and not report.passed:
        return EXIT_FAILED_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
