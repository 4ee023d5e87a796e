"""
Command-line entry point: ``flexvar <command> [--config PATH] [--seed INT]
[--threads INT] [--out DIR]``.
"""

import argparse
import sys
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from flexvar import __version__
from flexvar.cli.commands import COMMANDS
from flexvar.cli.config import load_config
from flexvar.logger import configure_logger
from flexvar.model.errors import NumericalError, SpecValidationError
from flexvar.settings import get_settings

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

HELP = {
    "estimate": "run the Gibbs sampler and store the posterior draws",
    "forecast": "predictive summaries from stored draws",
    "evaluate": "recursive out-of-sample evaluation against a benchmark",
    "simulate": "synthetic panel from a known data-generating process",
    "extract-ns": "Nelson-Siegel factors of a yield panel",
    "longrun": "long-run measure paths from stored draws",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", type=Path, help="output directory")

    parser = argparse.ArgumentParser(
        prog="flexvar",
        description="TVP-VARs with effect modifiers",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in HELP.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logger(settings.LOG_LEVEL, settings.LOG_DIR)

    try:
        config = load_config(args.config).with_overrides(
            seed=args.seed, threads=args.threads, out=args.out
        )
        written = COMMANDS[args.command](config)
    except (SpecValidationError, ValidationError) as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_VALIDATION
    except NumericalError as exc:
        logger.error(f"{args.command}: numerical failure: {exc}")
        return EXIT_NUMERICAL

    for path in written:
        logger.info(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
