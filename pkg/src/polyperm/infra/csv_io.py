from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from polyperm.domain.errors import FormatError
from polyperm.domain.poly import CoefficientMatrix, ExponentVector, SupportSet, parse_monomial_name

BENCH_COLUMNS: tuple[str, ...] = ("instance_id", "strategy", "log10_score")


def read_coefficients_csv(path: Path, support: SupportSet) -> CoefficientMatrix:
    """
    Read a coefficient matrix: one header column per monomial name, one row per equation.

    Header columns may appear in any order; they are realigned to the support.

    :param path: CSV file.
    :param support: Support the columns must cover exactly.
    :return: CoefficientMatrix.
    :raises FormatError: If the header does not name the support or a value is not a finite number.
    """
    try:
        frame: pd.DataFrame = pd.read_csv(path, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise FormatError(f"Cannot parse coefficient CSV {path}: {exc}") from exc

    by_alpha: dict[ExponentVector, str] = {}
    for name in frame.columns:
        try:
            alpha: ExponentVector = parse_monomial_name(str(name), support.n)
        except ValueError as exc:
            raise FormatError(f"Coefficient CSV {path}: {exc}") from exc
        if alpha in by_alpha:
            raise FormatError(f"Coefficient CSV {path}: monomial '{name}' appears twice.")
        by_alpha[alpha] = str(name)
    missing: list[str] = [n for alpha, n in zip(support, support.names()) if alpha not in by_alpha]
    extra: list[str] = [name for alpha, name in by_alpha.items() if alpha not in support]
    if missing or extra:
        raise FormatError(f"Coefficient CSV {path}: missing columns {missing}, unexpected columns {extra}.")
    if frame.empty:
        raise FormatError(f"Coefficient CSV {path} has no equation rows.")

    ordered: pd.DataFrame = frame[[by_alpha[alpha] for alpha in support]]
    try:
        values: np.ndarray = ordered.apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"Coefficient CSV {path} contains non-numeric values: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise FormatError(f"Coefficient CSV {path} contains non-finite values.")
    return CoefficientMatrix(values, support)


def write_long_csv(frame: pd.DataFrame, path: Path) -> Path:
    """
    Write a long-format benchmark table.

    :param frame: Table with columns ``instance_id, strategy, log10_score``.
    :param path: Destination.
    :return: The written path.
    :raises ValueError: If the columns differ.
    """
    if tuple(frame.columns) != BENCH_COLUMNS:
        raise ValueError(f"Benchmark table must have columns {BENCH_COLUMNS}, got {tuple(frame.columns)}.")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
