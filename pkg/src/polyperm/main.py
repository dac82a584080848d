from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

from pydantic import ValidationError

from polyperm.cli.commands import apply_overrides, build_handlers
from polyperm.cli.parser import build_parser
from polyperm.config.settings import Settings
from polyperm.domain.errors import PolypermError
from polyperm.domain.services import PipelineService
from polyperm.utils.logging import configure_logging, get_logger

EXIT_RUNTIME: int = 1
EXIT_USAGE: int = 2


def _fail(exc: BaseException, code: int, err: TextIO) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=err)
    return code


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    """
    CLI entrypoint.

    :param argv: Arguments without the program name; ``sys.argv[1:]`` when None.
    :param out: Stream for command output, stdout when None.
    :param err: Stream for error lines, stderr when None.
    :return: Exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
    """
    out = out or sys.stdout
    err = err or sys.stderr
    parser: argparse.ArgumentParser = build_parser()
    try:
        args: argparse.Namespace = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE

    try:
        settings: Settings = apply_overrides(Settings(), args)
    except ValidationError as exc:
        return _fail(exc, EXIT_USAGE, err)
    configure_logging(settings.log_level)
    logger = get_logger()
    service: PipelineService = PipelineService(settings=settings, logger=logger)
    handler = build_handlers(service, logger, out)[args.command]

    try:
        return handler(args)
    except (PolypermError, OSError) as exc:
        logger.debug(f"Command failed command={args.command}", exc_info=True)
        return _fail(exc, EXIT_RUNTIME, err)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE, err)


if __name__ == "__main__":
    sys.exit(main())
