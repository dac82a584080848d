from __future__ import annotations

import logging
from typing import Final

LOGGER_NAME: Final[str] = "polyperm"


def configure_logging(level: str) -> None:
    """
    Configure application logging.

    Also used as the initializer of pool worker processes, so workers log at the parent's level.

    :param level: Logging level (e.g. ``INFO``).
    :return: None.
    """
    root: logging.Logger = logging.getLogger()
    lvl: str = level.upper()

    if root.handlers:
        root.setLevel(lvl)
        return

    formatter: logging.Formatter = logging.Formatter(
        fmt="%(asctime)s %(levelname)s %(processName)s %(name)s %(message)s",
        datefmt="%Y-%m-%dT%H:%M:%S%z",
    )
    handler: logging.StreamHandler = logging.StreamHandler()
    handler.setFormatter(formatter)

    root.setLevel(lvl)
    root.addHandler(handler)


def get_logger() -> logging.Logger:
    """
    Return the package logger.

    :return: Logger named ``LOGGER_NAME``.
    """
    return logging.getLogger(LOGGER_NAME)
