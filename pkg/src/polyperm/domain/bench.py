from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from polyperm.domain.errors import AllFailedError, DimensionError, PolypermError
from polyperm.domain.dataset import sample_coefficients
from polyperm.domain.models import RangeSpec, SpreadReport, StrategySummary, TimingSummary
from polyperm.domain.neural import MLPModel, predict_scores
from polyperm.domain.oracle import best_permutation, rank_from_scores, rank_permutations
from polyperm.domain.perm import (
    DEFAULT_MAX_VARIABLES,
    VariablePermutation,
    column_permutations,
    composition_table,
    enumerate_permutations,
    permute_columns,
)
from polyperm.domain.poly import CoefficientMatrix
from polyperm.domain.solver import SolverTemplate, SolverTolerances, solve_with_permutation
from polyperm.infra.csv_io import BENCH_COLUMNS
from polyperm.infra.workers import WorkerPool
from polyperm.utils.logging import get_logger

BEST: str = "best"
PREDICTED: str = "predicted"


def strategy_name(P: VariablePermutation) -> str:
    """
    Strategy label of a fixed permutation, e.g. ``perm:213``.

    :param P: Permutation.
    :return: Label.
    """
    return "perm:" + "".join(str(i + 1) for i in P.image)


@dataclass(frozen=True, slots=True, eq=False)
class ScoreTable:
    """
    Oracle scores of every permutation on a set of fresh instances.

    :param n: Variable count.
    :param instance_ids: Index of each kept instance in the generated stream.
    :param instances: Kept instances.
    :param scores: ``kept x n!`` scores, ``inf`` for failures.
    :param skipped: Instances on which every permutation failed.
    """

    n: int
    instance_ids: np.ndarray
    instances: tuple[CoefficientMatrix, ...]
    scores: np.ndarray
    skipped: int

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    def best_indices(self) -> np.ndarray:
        return np.asarray([best_permutation(rank_from_scores(row)) for row in self.scores], dtype=np.intp)

    def best_scores(self) -> np.ndarray:
        return np.min(self.scores, axis=1) if len(self) else np.zeros(0)


@dataclass(frozen=True, slots=True)
class _ScoreJob:
    template: SolverTemplate
    spec: RangeSpec
    seed: int
    tolerances: SolverTolerances
    max_variables: int


def _score_one(job: _ScoreJob, index: int) -> tuple[int, CoefficientMatrix, np.ndarray | None]:
    t: SolverTemplate = job.template
    rng: np.random.Generator = np.random.default_rng([job.seed, index])
    C: CoefficientMatrix = sample_coefficients(t.support, t.config.m, job.spec, rng, t.config.degrees)
    try:
        _, scores = rank_permutations(C, t, job.tolerances, job.max_variables)
    except AllFailedError:
        get_logger().debug(f"Bench instance skipped index={index} reason=all_failed")
        return index, C, None
    return index, C, np.asarray([s.score for s in scores], dtype=np.float64)


def collect_scores(
    t: SolverTemplate,
    spec: RangeSpec,
    count: int,
    seed: int,
    *,
    tolerances: SolverTolerances | None = None,
    max_variables: int = DEFAULT_MAX_VARIABLES,
    workers: int = 1,
    logger: logging.Logger | None = None,
) -> ScoreTable:
    """
    Draw ``count`` fresh instances and score every permutation on each.

    Instance i is drawn from ``default_rng([seed, i])``; instances on which every permutation fails are
    counted as skipped.

    :param t: Template.
    :param spec: Coefficient intervals.
    :param count: Instances to draw.
    :param seed: Stream seed.
    :param tolerances: Numerical thresholds.
    :param max_variables: Capacity cap on n.
    :param workers: Worker processes.
    :param logger: Logger.
    :return: ScoreTable.
    """
    log: logging.Logger = logger or get_logger()
    n: int = t.config.n
    k: int = len(enumerate_permutations(n, max_variables))
    job = _ScoreJob(t, spec, seed, tolerances or SolverTolerances(), max_variables)
    results = WorkerPool(workers, log).map(partial(_score_one, job), range(count))
    kept = [(i, C, s) for i, C, s in results if s is not None]
    log.info(
        f"Scores collected problem={t.config.label()} instances={len(kept)} skipped={count - len(kept)} seed={seed}"
    )
    return ScoreTable(
        n=n,
        instance_ids=np.asarray([i for i, _, _ in kept], dtype=np.int64),
        instances=tuple(C for _, C, _ in kept),
        scores=np.stack([s for _, _, s in kept]) if kept else np.zeros((0, k)),
        skipped=count - len(kept),
    )


def _log10(scores: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log10(scores)


def long_frame(table: ScoreTable, predicted: np.ndarray | None = None) -> pd.DataFrame:
    """
    Long-format table ``instance_id, strategy, log10_score``: every fixed permutation, the best-of and
    optionally the predicted strategy per instance.

    :param table: Oracle scores.
    :param predicted: Predicted permutation index per kept instance.
    :return: DataFrame.
    :raises DimensionError: If the prediction count differs from the instance count.
    """
    perms: tuple[VariablePermutation, ...] = enumerate_permutations(table.n, table.n)
    columns: dict[str, np.ndarray] = {strategy_name(P): table.scores[:, k] for k, P in enumerate(perms)}
    columns[BEST] = table.best_scores()
    if predicted is not None:
        if predicted.shape[0] != len(table):
            raise DimensionError(f"{predicted.shape[0]} predictions for {len(table)} instances.")
        columns[PREDICTED] = table.scores[np.arange(len(table)), predicted]
    wide: pd.DataFrame = pd.DataFrame({name: _log10(values) for name, values in columns.items()})
    wide.insert(0, BENCH_COLUMNS[0], table.instance_ids)
    frame: pd.DataFrame = wide.melt(
        id_vars=BENCH_COLUMNS[0], var_name=BENCH_COLUMNS[1], value_name=BENCH_COLUMNS[2]
    )
    return frame[list(BENCH_COLUMNS)]


def _quantiles(values: np.ndarray) -> tuple[float, float, float]:
    if values.size == 0:
        return math.nan, math.nan, math.nan
    q: np.ndarray = np.quantile(values, [0.25, 0.5, 0.75], method="inverted_cdf")
    return float(q[0]), float(q[1]), float(q[2])


def summarize(frame: pd.DataFrame) -> tuple[StrategySummary, ...]:
    """
    Quartiles of the log10 scores per strategy, in order of first appearance.

    Quartiles are sample values (inverted CDF), so failed instances enter as ``inf``.

    :param frame: Long-format table.
    :return: Summaries.
    """
    out: list[StrategySummary] = []
    for name, group in frame.groupby(BENCH_COLUMNS[1], sort=False):
        values: np.ndarray = group[BENCH_COLUMNS[2]].to_numpy(dtype=np.float64)
        q1, med, q3 = _quantiles(values)
        out.append(
            StrategySummary(
                strategy=str(name),
                count=int(values.size),
                failed=int(np.count_nonzero(np.isposinf(values))),
                q1=q1,
                median=med,
                q3=q3,
            )
        )
    return tuple(out)


def median_ratio(numerator: np.ndarray, denominator: np.ndarray) -> float:
    """
    Ratio of two sample medians in linear scale.

    :param numerator: Scores.
    :param denominator: Scores.
    :return: Ratio, ``nan`` when either side is empty.
    """
    if numerator.size == 0 or denominator.size == 0:
        return math.nan
    num: float = _quantiles(numerator)[1]
    den: float = _quantiles(denominator)[1]
    if den == 0.0:
        return math.inf if num > 0.0 else math.nan
    with np.errstate(invalid="ignore"):
        return float(num / den)


def spread_report(table: ScoreTable, frame: pd.DataFrame, problem: str, ranges: str) -> SpreadReport:
    """
    Oracle-only summary of how much the permutation matters.

    :param table: Oracle scores.
    :param frame: Long-format table of the fixed permutations and best-of.
    :param problem: Problem label.
    :param ranges: Range label.
    :return: SpreadReport.
    """
    summaries: tuple[StrategySummary, ...] = tuple(s for s in summarize(frame) if s.strategy != PREDICTED)
    identity: np.ndarray = table.scores[:, 0] if len(table) else np.zeros(0)
    return SpreadReport(
        problem=problem,
        ranges=ranges,
        instances=len(table),
        skipped=table.skipped,
        strategies=summaries,
        identity_to_best_median_ratio=median_ratio(identity, table.best_scores()),
    )


def predict_indices(model: MLPModel, instances: Sequence[CoefficientMatrix]) -> np.ndarray:
    """
    Ranker prediction for every instance.

    :param model: Model.
    :param instances: Instances.
    :return: Canonical permutation indices.
    """
    if not instances:
        return np.zeros(0, dtype=np.intp)
    outputs: np.ndarray = predict_scores(model, np.stack([C.vec() for C in instances]))
    return np.asarray([best_permutation(row) for row in outputs], dtype=np.intp)


def top_half_rate(table: ScoreTable, predicted: np.ndarray) -> float:
    """
    Fraction of instances whose predicted permutation lies in the better half of the ground-truth ranking.

    :param table: Oracle scores.
    :param predicted: Predicted indices.
    :return: Rate in [0, 1].
    """
    if len(table) == 0:
        return 0.0
    k: int = table.scores.shape[1]
    hits: int = 0
    for row, pred in zip(table.scores, predicted):
        position: int = round((k - 1) * (1.0 - float(rank_from_scores(row).values[pred])))
        hits += int(position < k / 2)
    return hits / len(table)


def hit_rate(table: ScoreTable, predicted: np.ndarray) -> float:
    if len(table) == 0:
        return 0.0
    return float(np.mean(table.best_indices() == predicted))


def equivariance_rate(model: MLPModel, table: ScoreTable) -> float:
    """
    Fraction of permuted instances on which the prediction equals the transferred oracle best.

    Every kept instance is permuted by every canonical permutation; the oracle best of a permuted instance
    follows from its scores without solving.

    :param model: Model.
    :param table: Oracle scores.
    :return: Rate in [0, 1].
    """
    if len(table) == 0:
        return 0.0
    composition: np.ndarray = composition_table(table.n)
    hits: int = 0
    total: int = 0
    for C, scores in zip(table.instances, table.scores):
        variants: list[CoefficientMatrix] = [permute_columns(C, Q) for Q in column_permutations(C.support)]
        predicted: np.ndarray = predict_indices(model, variants)
        for i, pred in enumerate(predicted):
            expected: int = best_permutation(rank_from_scores(scores[composition[:, i]]))
            hits += int(pred == expected)
            total += 1
    return hits / total


def time_paths(
    t: SolverTemplate,
    model: MLPModel,
    instances: Sequence[CoefficientMatrix],
    *,
    warmup: int = 100,
    iterations: int = 1000,
    tolerances: SolverTolerances | None = None,
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> TimingSummary:
    """
    Median wall-clock time of brute force (all n! solves, scored, best kept) and of the predicted path
    (ranker inference plus one solve), cycling over the given instances on the calling thread.

    :param t: Template.
    :param model: Model.
    :param instances: Instances to cycle through.
    :param warmup: Untimed iterations per path.
    :param iterations: Timed iterations per path.
    :param tolerances: Numerical thresholds.
    :param max_variables: Capacity cap on n.
    :return: TimingSummary in milliseconds.
    :raises ValueError: If there are no instances.
    """
    if not instances:
        raise ValueError("Timing needs at least one instance.")
    tol: SolverTolerances = tolerances or SolverTolerances()
    perms: tuple[VariablePermutation, ...] = enumerate_permutations(t.config.n, max_variables)

    def brute_force(C: CoefficientMatrix) -> None:
        try:
            rank_permutations(C, t, tol, max_variables)
        except AllFailedError:
            pass

    def predicted(C: CoefficientMatrix) -> None:
        P: VariablePermutation = perms[int(np.argmax(predict_scores(model, C.vec()[np.newaxis, :])[0]))]
        try:
            solve_with_permutation(C, t, P, tol)
        except PolypermError:
            pass

    def measure(fn: Callable[[CoefficientMatrix], None]) -> float:
        for it in range(warmup):
            fn(instances[it % len(instances)])
        elapsed: list[float] = []
        for it in range(iterations):
            C: CoefficientMatrix = instances[it % len(instances)]
            start: float = time.perf_counter()
            fn(C)
            elapsed.append(time.perf_counter() - start)
        return float(np.median(elapsed)) * 1e3

    return TimingSummary(
        brute_force_ms=measure(brute_force),
        predicted_ms=measure(predicted),
        iterations=iterations,
        warmup=warmup,
    )
