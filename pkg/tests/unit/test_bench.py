from __future__ import annotations

import math

import numpy as np
import pytest

from polyperm.domain.bench import (
    BEST,
    PREDICTED,
    ScoreTable,
    collect_scores,
    equivariance_rate,
    hit_rate,
    long_frame,
    median_ratio,
    predict_indices,
    spread_report,
    strategy_name,
    summarize,
    time_paths,
    top_half_rate,
)
from polyperm.domain.errors import DimensionError
from polyperm.domain.models import RangeSpec
from polyperm.domain.neural import MLPModel
from polyperm.domain.perm import VariablePermutation
from polyperm.domain.poly import CoefficientMatrix, enumerate_dense_support
from polyperm.domain.solver import SolverTemplate
from tests.conftest import PlantedFactory

MIXED = RangeSpec(ranges=((0.0, 1.0), (0.0, 10.0)))


def _table(scores: list[list[float]], n: int = 2) -> ScoreTable:
    support = enumerate_dense_support(n, 1)
    values = np.asarray(scores, dtype=np.float64)
    instances = tuple(CoefficientMatrix(np.full((n, len(support)), float(i + 1)), support) for i in range(len(values)))
    return ScoreTable(n=n, instance_ids=np.arange(len(values)), instances=instances, scores=values, skipped=0)


def _constant_model(n: int, h: int, favourite: int) -> MLPModel:
    model = MLPModel.create((n * h, 4, math.factorial(n)))
    for name, value in model.params.items():
        model.params[name] = np.zeros_like(value)
    model.params["b_out"][favourite] = 1.0
    return model


def test_strategy_name() -> None:
    assert strategy_name(VariablePermutation((1, 0, 2))) == "perm:213"


def test_collect_scores_best_never_worse(template_3x3: SolverTemplate) -> None:
    table = collect_scores(template_3x3, MIXED, 6, seed=100)
    assert len(table) + table.skipped == 6
    assert table.scores.shape == (len(table), 6)
    assert np.all(table.best_scores()[:, np.newaxis] <= table.scores)
    again = collect_scores(template_3x3, MIXED, 6, seed=100)
    np.testing.assert_array_equal(again.scores, table.scores)


def test_long_frame_layout() -> None:
    table = _table([[1e-10, 1e-8], [1e-6, math.inf]])
    frame = long_frame(table, np.array([1, 0]))
    assert list(frame.columns) == ["instance_id", "strategy", "log10_score"]
    assert len(frame) == 2 * (2 + 2)
    assert list(dict.fromkeys(frame["strategy"])) == ["perm:12", "perm:21", BEST, PREDICTED]
    predicted = frame[frame["strategy"] == PREDICTED]["log10_score"].tolist()
    assert predicted == pytest.approx([-8.0, -6.0])
    assert frame[frame["strategy"] == "perm:21"]["log10_score"].tolist()[1] == math.inf
    with pytest.raises(DimensionError):
        long_frame(table, np.array([0]))


def test_summarize_and_spread() -> None:
    table = _table([[1e-10, 1e-8], [1e-6, math.inf], [1e-4, 1e-12], [1e-2, 1e-2]])
    frame = long_frame(table)
    summaries = {s.strategy: s for s in summarize(frame)}
    assert set(summaries) == {"perm:12", "perm:21", BEST}
    assert summaries["perm:21"].failed == 1
    assert summaries["perm:12"].median == pytest.approx(-6.0)
    assert summaries[BEST].q1 <= summaries[BEST].median <= summaries[BEST].q3
    report = spread_report(table, frame, "2x1", "0,1")
    assert report.instances == 4 and report.skipped == 0
    assert len(report.strategies) == 3
    assert report.identity_to_best_median_ratio == pytest.approx(1e-6 / 1e-10)


def test_median_ratio_edges() -> None:
    assert median_ratio(np.array([4.0, 2.0, 8.0]), np.array([1.0, 2.0, 4.0])) == 2.0
    assert math.isnan(median_ratio(np.zeros(0), np.ones(2)))
    assert median_ratio(np.ones(1), np.zeros(1)) == math.inf


def test_rates() -> None:
    table = _table([[1e-10, 1e-8], [1e-6, 1e-9], [1e-3, 1e-4]])
    predicted = np.array([0, 0, 1])
    assert hit_rate(table, predicted) == pytest.approx(2 / 3)
    assert top_half_rate(table, predicted) == pytest.approx(2 / 3)
    assert hit_rate(_table([]), np.zeros(0, dtype=np.intp)) == 0.0


def test_predict_indices_and_equivariance() -> None:
    table = _table([[1e-10, 1e-8], [1e-6, 1e-9]])
    model = _constant_model(2, 3, favourite=1)
    np.testing.assert_array_equal(predict_indices(model, table.instances), [1, 1])
    # a constant prediction is right on exactly one of the two variants of every instance
    assert equivariance_rate(model, table) == 0.5
    assert predict_indices(model, []).shape == (0,)


def test_time_paths_small(template_2x2: SolverTemplate, planted: PlantedFactory) -> None:
    rng = np.random.default_rng(5)
    instances = [planted(template_2x2, rng).coefficients for _ in range(3)]
    model = _constant_model(2, len(template_2x2.support), favourite=0)
    timing = time_paths(template_2x2, model, instances, warmup=1, iterations=3)
    assert timing.iterations == 3 and timing.warmup == 1
    assert timing.brute_force_ms > 0.0 and timing.predicted_ms > 0.0
    with pytest.raises(ValueError):
        time_paths(template_2x2, model, [], warmup=0, iterations=1)
