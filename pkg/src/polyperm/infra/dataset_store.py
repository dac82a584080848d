from __future__ import annotations

import logging
import math
import struct
from pathlib import Path
from typing import Final

import numpy as np

from polyperm.domain.dataset import LabeledDataset
from polyperm.domain.errors import FormatError
from polyperm.utils.logging import get_logger

MAGIC: Final[bytes] = b"PGBD"
VERSION: Final[int] = 1
# magic, version, n, m, h, K, count, seed
HEADER: Final[struct.Struct] = struct.Struct("<4sIIIIIQQ")
_REAL: Final[str] = "<f8"


def encode_dataset(data: LabeledDataset) -> bytes:
    """
    Serialize a dataset.

    Each sample stores its ``m * h`` coefficients row-major followed by its n! labels, as little-endian
    64-bit reals.

    :param data: Dataset.
    :return: File content.
    """
    header: bytes = HEADER.pack(MAGIC, VERSION, data.n, data.m, data.h, data.k, len(data), data.seed)
    payload: np.ndarray = np.concatenate([data.inputs(), data.labels], axis=1).astype(_REAL)
    return header + payload.tobytes()


def decode_dataset(raw: bytes) -> LabeledDataset:
    """
    Parse a dataset.

    :param raw: File content.
    :return: LabeledDataset.
    :raises FormatError: On bad magic, unsupported version, inconsistent header or wrong payload length.
    """
    if len(raw) < HEADER.size:
        raise FormatError(f"Dataset file truncated: {len(raw)} bytes, header needs {HEADER.size}.")
    magic, version, n, m, h, k, count, seed = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"Bad dataset magic {magic!r}.")
    if version != VERSION:
        raise FormatError(f"Unsupported dataset version {version}.")
    if n < 1 or m < 1 or h < 1 or k != math.factorial(n):
        raise FormatError(f"Inconsistent dataset header n={n} m={m} h={h} K={k}.")
    width: int = m * h + k
    expected: int = HEADER.size + count * width * 8
    if len(raw) != expected:
        raise FormatError(f"Dataset payload has {len(raw)} bytes, header implies {expected}.")
    if count == 0:
        return LabeledDataset.empty(n, m, h, seed)
    payload: np.ndarray = np.frombuffer(raw, dtype=_REAL, offset=HEADER.size).reshape(count, width)
    return LabeledDataset(
        n=n,
        coefficients=payload[:, : m * h].reshape(count, m, h),
        labels=payload[:, m * h :],
        seed=seed,
    )


class DatasetStore:
    """
    Binary "PGBD" dataset files.

    :param logger: Logger.
    """

    def __init__(self, logger: logging.Logger | None = None) -> None:
        self._logger: logging.Logger = logger or get_logger()

    def write(self, data: LabeledDataset, path: Path) -> Path:
        """
        Write a dataset file.

        :param data: Dataset.
        :param path: Destination; parent directories are created.
        :return: The written path.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_dataset(data))
        self._logger.info(f"Dataset written path={path} samples={len(data)} n={data.n} m={data.m} h={data.h}")
        return path

    def read(self, path: Path) -> LabeledDataset:
        """
        Read a dataset file.

        :param path: Source file.
        :return: LabeledDataset.
        :raises FileNotFoundError: If the file does not exist.
        :raises FormatError: If the file is malformed.
        """
        data: LabeledDataset = decode_dataset(path.read_bytes())
        self._logger.debug(f"Dataset read path={path} samples={len(data)}")
        return data
