from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from polyperm.domain.errors import FormatError
from polyperm.domain.poly import CoefficientMatrix, enumerate_dense_support
from polyperm.infra.csv_io import BENCH_COLUMNS, read_coefficients_csv, write_long_csv
from tests.conftest import write_coefficients_csv

SUPPORT = enumerate_dense_support(2, 1)


def test_coefficients_written_with_monomial_headers(tmp_path: Path) -> None:
    C = CoefficientMatrix(np.array([[1.0, 2.0, -3.0], [0.1, -1.0, 0.0]]), SUPPORT)
    path = write_coefficients_csv(C, tmp_path / "c.csv")
    assert path.read_text().splitlines()[0] == "x1,x2,1"
    np.testing.assert_array_equal(read_coefficients_csv(path, SUPPORT).values, C.values)


def test_columns_are_realigned(tmp_path: Path) -> None:
    path = tmp_path / "c.csv"
    path.write_text("1, x2, x1\n-3, 2, 1\n0, -1, 1\n")
    C = read_coefficients_csv(path, SUPPORT)
    np.testing.assert_array_equal(C.values, [[1.0, 2.0, -3.0], [1.0, -1.0, 0.0]])


@pytest.mark.parametrize(
    "content",
    [
        "x1,x2\n1,2\n",
        "x1,x2,1,x1^2\n1,2,3,4\n",
        "x1,x1,1\n1,2,3\n",
        "x1,y2,1\n1,2,3\n",
        "x1,x2,1\n",
        "x1,x2,1\n1,abc,3\n",
        "x1,x2,1\n1,inf,3\n",
        "",
    ],
    ids=["missing", "extra", "duplicate", "unknown", "no-rows", "text", "non-finite", "empty"],
)
def test_malformed_coefficients(tmp_path: Path, content: str) -> None:
    path = tmp_path / "c.csv"
    path.write_text(content)
    with pytest.raises(FormatError):
        read_coefficients_csv(path, SUPPORT)


def test_long_csv(tmp_path: Path) -> None:
    frame = pd.DataFrame({"instance_id": [0, 0], "strategy": ["perm:12", "best"], "log10_score": [-9.5, float("inf")]})
    path = write_long_csv(frame, tmp_path / "out" / "bench.csv")
    back = pd.read_csv(path)
    assert tuple(back.columns) == BENCH_COLUMNS
    assert back["log10_score"].tolist() == [-9.5, float("inf")]
    with pytest.raises(ValueError):
        write_long_csv(frame[["strategy", "instance_id", "log10_score"]], tmp_path / "bad.csv")
