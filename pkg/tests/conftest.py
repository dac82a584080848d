from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Final

import numpy as np
import pandas as pd
import pytest
from icecream import ic

from polyperm.domain.models import ProblemConfig
from polyperm.domain.poly import CoefficientMatrix, plant_root
from polyperm.domain.solver import SolverTemplate, generate_template

ENV_PREFIX: Final[str] = "POLYPERM_TEST_"
ACCEPTANCE_ENV: Final[str] = f"{ENV_PREFIX}ACCEPTANCE"
TEMPLATE_SEED: Final[int] = 0


@dataclass(frozen=True, slots=True)
class PlantedInstance:
    """
    Instance with a known real root.

    :param coefficients: Coefficient matrix.
    :param root: Planted root.
    """

    coefficients: CoefficientMatrix
    root: np.ndarray


PlantedFactory = Callable[[SolverTemplate, np.random.Generator], PlantedInstance]


class BenchReporter:
    """
    Structured output for numbers measured by tests, using icecream.

    Keeps printing logic out of the test bodies.
    """

    def __init__(self) -> None:
        ic.configureOutput(includeContext=True, argToStringFunction=self._arg_to_str)

    @staticmethod
    def _arg_to_str(arg: Any) -> str:
        """
        Convert icecream arguments to strings without truncation.

        :param arg: Any value.
        :return: String representation.
        """
        if isinstance(arg, str):
            return arg
        if isinstance(arg, float):
            return f"{arg:.6g}"
        return repr(arg)

    def section(self, title: str) -> None:
        """
        Print a logical section header.

        :param title: Section title.
        :return: None.
        """
        ic(f"=== {title} ===")

    def metric(self, label: str, value: float | int) -> None:
        """
        Print one measured value.

        :param label: Metric name.
        :param value: Measured value.
        :return: None.
        """
        ic(f"[METRIC] {label}={self._arg_to_str(value)}")

    def message(self, msg: str) -> None:
        """
        Log a message line.

        :param msg: Message string.
        :return: None.
        """
        ic(msg)


def _get_env_bool(key: str) -> bool:
    raw: str = os.environ.get(key, "").strip().lower()
    if raw in ("", "0", "false", "no", "n", "off"):
        return False
    if raw in ("1", "true", "yes", "y", "on"):
        return True
    raise ValueError(f"Invalid bool for {key}: {raw}")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """
    Skip desk-scale acceptance gates unless ``POLYPERM_TEST_ACCEPTANCE`` is enabled.

    :param config: Pytest config.
    :param items: Collected tests.
    :return: None.
    """
    if _get_env_bool(ACCEPTANCE_ENV):
        return
    skip = pytest.mark.skip(reason=f"set {ACCEPTANCE_ENV}=1 to run acceptance gates")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


def make_planted(t: SolverTemplate, rng: np.random.Generator, low: float = -1.0, high: float = 1.0) -> PlantedInstance:
    """
    Draw a U[low, high] instance and plant a root drawn from U[-1, 1]^n.

    :param t: Template.
    :param rng: Random generator.
    :param low: Lower coefficient bound.
    :param high: Upper coefficient bound.
    :return: PlantedInstance.
    """
    root: np.ndarray = rng.uniform(-1.0, 1.0, size=t.config.n)
    values: np.ndarray = rng.uniform(low, high, size=(t.config.m, len(t.support)))
    return PlantedInstance(coefficients=plant_root(values, t.support, root), root=root)


def write_coefficients_csv(C: CoefficientMatrix, path: Path) -> Path:
    """
    Write a coefficient matrix in the CSV layout the solve command reads.

    :param C: Coefficient matrix.
    :param path: Destination.
    :return: The written path.
    """
    pd.DataFrame(C.values, columns=C.support.names()).to_csv(path, index=False, float_format="%.17g")
    return path


@pytest.fixture(scope="session")
def template_3x3() -> SolverTemplate:
    return generate_template(ProblemConfig.dense(3, 3), TEMPLATE_SEED)


@pytest.fixture(scope="session")
def template_4x2() -> SolverTemplate:
    return generate_template(ProblemConfig.dense(4, 2), TEMPLATE_SEED)


@pytest.fixture(scope="session")
def template_2x2() -> SolverTemplate:
    return generate_template(ProblemConfig.dense(2, 2), TEMPLATE_SEED)


@pytest.fixture(scope="session")
def template_1x1() -> SolverTemplate:
    return generate_template(ProblemConfig.dense(1, 1), TEMPLATE_SEED)


@pytest.fixture()
def planted() -> PlantedFactory:
    """
    Provide the planted-root instance factory.

    :return: Callable ``(template, rng) -> PlantedInstance``.
    """
    return make_planted


@pytest.fixture(scope="session")
def reporter() -> BenchReporter:
    """
    Provide a shared reporter using icecream.

    :return: BenchReporter.
    """
    return BenchReporter()
