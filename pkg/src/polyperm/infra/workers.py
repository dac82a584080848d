from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from polyperm.utils.logging import configure_logging, get_logger

_T = TypeVar("_T")
_R = TypeVar("_R")


class WorkerPool:
    """
    Ordered map over worker processes.

    Results always come back in input order, so any per-item RNG stream derived from the item index gives the
    same output for every worker count. With one worker everything runs in the calling process. Worker
    processes configure logging on start-up at ``log_level``.

    :param workers: Number of worker processes (>= 1).
    :param logger: Logger.
    :param log_level: Level for worker processes; the calling process's effective root level when None.
    :raises ValueError: If workers < 1.
    """

    def __init__(self, workers: int, logger: logging.Logger | None = None, log_level: str | None = None) -> None:
        if workers < 1:
            raise ValueError(f"workers must be >= 1 (got {workers}).")
        self._workers: int = int(workers)
        self._logger: logging.Logger = logger or get_logger()
        self._log_level: str = log_level or logging.getLevelName(logging.getLogger().getEffectiveLevel())

    @property
    def workers(self) -> int:
        return self._workers

    @property
    def log_level(self) -> str:
        return self._log_level

    def map(self, fn: Callable[[_T], _R], items: Iterable[_T]) -> list[_R]:
        """
        Apply a picklable function to every item.

        :param fn: Top-level function (or ``functools.partial`` of one).
        :param items: Inputs.
        :return: Results in input order.
        """
        batch: list[_T] = list(items)
        if self._workers == 1 or len(batch) <= 1:
            return [fn(item) for item in batch]
        chunksize: int = max(1, len(batch) // (self._workers * 4))
        self._logger.debug(
            f"Worker pool started workers={self._workers} items={len(batch)} chunksize={chunksize} "
            f"log_level={self._log_level}"
        )
        with ProcessPoolExecutor(
            max_workers=self._workers, initializer=configure_logging, initargs=(self._log_level,)
        ) as executor:
            return list(executor.map(fn, batch, chunksize=chunksize))
