"""Command-line entry: argument parsing, logging setup and exit codes"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from src import __version__
from src.cli.commands import aggregate, estimate, experiment, simulate
from src.config.settings import settings
from src.core.errors import CrowdConfError, UsageError
from src.utils.logger import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdconf",
        description="Worker error rates with confidence intervals from crowd answers alone.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (estimate, aggregate, experiment, simulate):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_FILE)

    try:
        return args.handler(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except (CrowdConfError, ValidationError, ValueError, OSError) as e:
        if isinstance(e, ValidationError):
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            message = f"{location}: {first['msg']}" if location else first["msg"]
        else:
            message = str(e).splitlines()[0] if str(e) else type(e).__name__
        logger.error(f"{args.command} failed: {message}")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Unhandled exception: {e}", exc_info=True)
        return EXIT_FAILURE
