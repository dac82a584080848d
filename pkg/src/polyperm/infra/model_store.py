from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Final

import numpy as np

from polyperm.domain.errors import DimensionError, FormatError
from polyperm.domain.models import InputTransform
from polyperm.domain.neural import MLPModel
from polyperm.utils.logging import get_logger

MAGIC: Final[bytes] = b"PGBM"
VERSION: Final[int] = 1
# magic, version, layer count, input transform, has data seed, data seed, bn momentum, bn eps
HEADER: Final[struct.Struct] = struct.Struct("<4sIIIIQdd")
_REAL: Final[str] = "<f8"
_DIM: Final[str] = "<u4"
_TRANSFORM_CODES: Final[dict[InputTransform, int]] = {InputTransform.RAW: 0, InputTransform.SIGNED_LOG: 1}


def _tensor_order(model_dims: tuple[int, ...]) -> list[tuple[str, tuple[int, ...]]]:
    """
    Serialization order: for each hidden layer W, b, gamma, beta, running mean, running variance; then the
    output W and b.
    """
    order: list[tuple[str, tuple[int, ...]]] = []
    for i, (fan_in, fan_out) in enumerate(zip(model_dims[:-2], model_dims[1:-1])):
        order += [
            (f"W{i}", (fan_in, fan_out)),
            (f"b{i}", (fan_out,)),
            (f"gamma{i}", (fan_out,)),
            (f"beta{i}", (fan_out,)),
            (f"running_mean{i}", (fan_out,)),
            (f"running_var{i}", (fan_out,)),
        ]
    return order + [("W_out", (model_dims[-2], model_dims[-1])), ("b_out", (model_dims[-1],))]


def encode_model(model: MLPModel) -> bytes:
    """
    Serialize a model.

    :param model: Model.
    :return: File content.
    """
    header: bytes = HEADER.pack(
        MAGIC,
        VERSION,
        len(model.dims),
        _TRANSFORM_CODES[model.input_transform],
        int(model.data_seed is not None),
        model.data_seed or 0,
        model.bn_momentum,
        model.bn_eps,
    )
    chunks: list[bytes] = [header, np.asarray(model.dims, dtype=_DIM).tobytes()]
    for name, _ in _tensor_order(model.dims):
        if name.startswith("running_mean"):
            arr: np.ndarray = model.running_mean[int(name.removeprefix("running_mean"))]
        elif name.startswith("running_var"):
            arr = model.running_var[int(name.removeprefix("running_var"))]
        else:
            arr = model.params[name]
        chunks.append(np.ascontiguousarray(arr, dtype=_REAL).tobytes())
    return b"".join(chunks)


def decode_model(raw: bytes) -> MLPModel:
    """
    Parse a model.

    :param raw: File content.
    :return: MLPModel.
    :raises FormatError: On bad magic, unsupported version, unknown transform or wrong payload length.
    """
    if len(raw) < HEADER.size:
        raise FormatError(f"Model file truncated: {len(raw)} bytes, header needs {HEADER.size}.")
    magic, version, layers, transform_code, has_seed, data_seed, momentum, eps = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"Bad model magic {magic!r}.")
    if version != VERSION:
        raise FormatError(f"Unsupported model version {version}.")
    transforms: dict[int, InputTransform] = {code: tr for tr, code in _TRANSFORM_CODES.items()}
    if transform_code not in transforms:
        raise FormatError(f"Unknown input transform code {transform_code}.")
    if layers < 2:
        raise FormatError(f"Model must have at least 2 layer widths, header says {layers}.")
    offset: int = HEADER.size
    dims_end: int = offset + 4 * layers
    if len(raw) < dims_end:
        raise FormatError("Model file truncated inside the layer widths.")
    dims: tuple[int, ...] = tuple(int(d) for d in np.frombuffer(raw, dtype=_DIM, count=layers, offset=offset))
    order: list[tuple[str, tuple[int, ...]]] = _tensor_order(dims)
    expected: int = dims_end + 8 * sum(int(np.prod(shape)) for _, shape in order)
    if len(raw) != expected:
        raise FormatError(f"Model payload has {len(raw)} bytes, layer widths imply {expected}.")

    offset = dims_end
    tensors: dict[str, np.ndarray] = {}
    for name, shape in order:
        size: int = int(np.prod(shape))
        tensors[name] = np.frombuffer(raw, dtype=_REAL, count=size, offset=offset).reshape(shape)
        offset += 8 * size
    hidden: int = len(dims) - 2
    try:
        return MLPModel(
            dims=dims,
            params={k: v for k, v in tensors.items() if not k.startswith("running_")},
            running_mean=[tensors[f"running_mean{i}"] for i in range(hidden)],
            running_var=[tensors[f"running_var{i}"] for i in range(hidden)],
            input_transform=transforms[transform_code],
            data_seed=int(data_seed) if has_seed else None,
            bn_momentum=momentum,
            bn_eps=eps,
        )
    except DimensionError as exc:
        raise FormatError(f"Invalid model parameters: {exc}") from exc


class ModelStore:
    """
    Binary "PGBM" model files.

    :param logger: Logger.
    """

    def __init__(self, logger: logging.Logger | None = None) -> None:
        self._logger: logging.Logger = logger or get_logger()

    def save(self, model: MLPModel, path: Path) -> Path:
        """
        Write a model file.

        :param model: Model.
        :param path: Destination; parent directories are created.
        :return: The written path.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_model(model))
        self._logger.info(f"Model saved path={path} dims={list(model.dims)} data_seed={model.data_seed}")
        return path

    def load(self, path: Path) -> MLPModel:
        """
        Read a model file.

        :param path: Source file.
        :return: MLPModel.
        :raises FileNotFoundError: If the file does not exist.
        :raises FormatError: If the file is malformed.
        """
        model: MLPModel = decode_model(path.read_bytes())
        self._logger.debug(f"Model loaded path={path} dims={list(model.dims)}")
        return model
