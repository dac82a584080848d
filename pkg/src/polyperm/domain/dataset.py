from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from polyperm.domain.errors import AllFailedError, DimensionError, GenerationStalledError
from polyperm.domain.models import RangeMode, RangeSpec
from polyperm.domain.oracle import InstanceScore, RankVector, rank_from_scores, rank_permutations
from polyperm.domain.perm import (
    DEFAULT_MAX_VARIABLES,
    column_permutations,
    composition_table,
    enumerate_permutations,
    permute_columns,
)
from polyperm.domain.poly import CoefficientMatrix, SupportSet, degree
from polyperm.domain.solver import SolverTemplate, SolverTolerances
from polyperm.infra.workers import WorkerPool
from polyperm.utils.logging import get_logger

DEFAULT_SPLIT: tuple[float, float, float] = (0.76, 0.12, 0.12)


@dataclass(frozen=True, slots=True, eq=False)
class Sample:
    """
    One labeled coefficient matrix.

    :param coefficients: Instance.
    :param labels: Ground-truth RankVector.
    :param scores: Raw oracle scores in canonical order (``inf`` for failures), None when read from disk.
    """

    coefficients: CoefficientMatrix
    labels: RankVector
    scores: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.scores is not None:
            scores: np.ndarray = np.array(self.scores, dtype=np.float64, copy=True)
            if scores.shape != self.labels.values.shape:
                raise DimensionError(f"Scores of shape {scores.shape} do not match {len(self.labels)} labels.")
            scores.setflags(write=False)
            object.__setattr__(self, "scores", scores)


@dataclass(frozen=True, slots=True, eq=False)
class LabeledDataset:
    """
    Contiguous storage of a list of samples, the in-memory form of a dataset file.

    :param n: Variable count.
    :param coefficients: ``count x m x h`` coefficient tensor.
    :param labels: ``count x n!`` label matrix.
    :param seed: Seed the samples were generated with.
    :raises DimensionError: If the arrays disagree in shape or the label width is not n!.
    """

    n: int
    coefficients: np.ndarray
    labels: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        coeffs: np.ndarray = np.array(self.coefficients, dtype=np.float64, copy=True)
        labels: np.ndarray = np.array(self.labels, dtype=np.float64, copy=True)
        if coeffs.ndim != 3 or labels.ndim != 2 or coeffs.shape[0] != labels.shape[0]:
            raise DimensionError(f"Dataset arrays of shapes {coeffs.shape} and {labels.shape} do not agree.")
        if labels.shape[1] != math.factorial(self.n):
            raise DimensionError(f"Label width {labels.shape[1]} differs from {self.n}! = {math.factorial(self.n)}.")
        coeffs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def empty(cls, n: int, m: int, h: int, seed: int = 0) -> LabeledDataset:
        return cls(n=n, coefficients=np.zeros((0, m, h)), labels=np.zeros((0, math.factorial(n))), seed=seed)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], n: int, m: int, h: int, seed: int = 0) -> LabeledDataset:
        """
        Stack samples.

        :param samples: Samples with m x h coefficients and n! labels.
        :param n: Variable count.
        :param m: Equation count.
        :param h: Support size.
        :param seed: Generation seed.
        :return: LabeledDataset.
        """
        if not samples:
            return cls.empty(n, m, h, seed)
        return cls(
            n=n,
            coefficients=np.stack([s.coefficients.values for s in samples]),
            labels=np.stack([s.labels.values for s in samples]),
            seed=seed,
        )

    def __len__(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def m(self) -> int:
        return int(self.coefficients.shape[1])

    @property
    def h(self) -> int:
        return int(self.coefficients.shape[2])

    @property
    def k(self) -> int:
        return int(self.labels.shape[1])

    def inputs(self) -> np.ndarray:
        """
        Row-major vectorized coefficients.

        :return: ``count x (m * h)`` matrix.
        """
        return self.coefficients.reshape(len(self), self.m * self.h)

    def samples(self, support: SupportSet) -> list[Sample]:
        """
        Unstack into samples over a support.

        :param support: Support with h monomials.
        :return: Samples without raw scores.
        """
        return [
            Sample(CoefficientMatrix(self.coefficients[i], support), RankVector(self.labels[i]))
            for i in range(len(self))
        ]


def sample_coefficients(
    support: SupportSet,
    m: int,
    spec: RangeSpec,
    rng: np.random.Generator,
    degrees: Sequence[int] | None = None,
) -> CoefficientMatrix:
    """
    Draw a random coefficient matrix.

    Every entry picks an interval uniformly from ``spec`` (or one interval for the whole matrix in
    per-instance mode) and then a value uniformly within it. Entries of equation j on monomials above
    ``degrees[j]`` are zero.

    :param support: Support with h monomials.
    :param m: Equation count.
    :param spec: Coefficient intervals.
    :param rng: Random generator.
    :param degrees: Optional per-equation degrees.
    :return: CoefficientMatrix.
    """
    h: int = len(support)
    bounds: np.ndarray = np.asarray(spec.ranges, dtype=np.float64)
    if spec.mode == RangeMode.PER_INSTANCE:
        choice: np.ndarray = np.full((m, h), int(rng.integers(len(bounds))))
    else:
        choice = rng.integers(len(bounds), size=(m, h))
    lo: np.ndarray = bounds[choice, 0]
    hi: np.ndarray = bounds[choice, 1]
    values: np.ndarray = lo + (hi - lo) * rng.random((m, h))
    if degrees is not None:
        degs: np.ndarray = np.asarray([degree(alpha) for alpha in support])
        for j, d_j in enumerate(degrees):
            values[j, degs > d_j] = 0.0
    return CoefficientMatrix(values, support)


@dataclass(frozen=True, slots=True)
class _LabelJob:
    template: SolverTemplate
    spec: RangeSpec
    seed: int
    tolerances: SolverTolerances
    max_variables: int
    max_attempts: int


@dataclass(frozen=True, slots=True)
class _LabelOutcome:
    index: int
    sample: Sample | None
    attempts: int


def _label_one(job: _LabelJob, index: int) -> _LabelOutcome:
    rng: np.random.Generator = np.random.default_rng([job.seed, index])
    t: SolverTemplate = job.template
    log: logging.Logger = get_logger()
    for attempt in range(1, job.max_attempts + 1):
        C: CoefficientMatrix = sample_coefficients(t.support, t.config.m, job.spec, rng, t.config.degrees)
        try:
            rank, scores = rank_permutations(C, t, job.tolerances, job.max_variables)
        except AllFailedError:
            log.debug(f"Sample discarded index={index} attempt={attempt} reason=all_failed")
            continue
        return _LabelOutcome(index=index, sample=Sample(C, rank, label_scores(scores)), attempts=attempt)
    return _LabelOutcome(index=index, sample=None, attempts=job.max_attempts)


def generate_base_dataset(
    count: int,
    t: SolverTemplate,
    spec: RangeSpec,
    seed: int,
    *,
    tolerances: SolverTolerances | None = None,
    max_variables: int = DEFAULT_MAX_VARIABLES,
    max_attempts_per_sample: int = 50,
    stall_ratio: float = 0.9,
    workers: int = 1,
    logger: logging.Logger | None = None,
) -> list[Sample]:
    """
    Draw and label ``count`` base samples.

    Sample i draws from its own stream ``default_rng([seed, i])`` and redraws until some permutation yields a
    real root, so the dataset does not depend on the worker count.

    :param count: Number of labeled samples.
    :param t: Template.
    :param spec: Coefficient intervals.
    :param seed: Dataset seed.
    :param tolerances: Numerical thresholds.
    :param max_variables: Capacity cap on n.
    :param max_attempts_per_sample: Draws allowed per sample.
    :param stall_ratio: Largest tolerated fraction of discarded draws.
    :param workers: Worker processes.
    :param logger: Logger.
    :return: Samples in index order.
    :raises ValueError: If count < 0.
    :raises CapacityError: If n exceeds the cap.
    :raises GenerationStalledError: If a sample ran out of attempts or too many draws were discarded.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0 (got {count}).")
    log: logging.Logger = logger or get_logger()
    enumerate_permutations(t.config.n, max_variables)
    if count == 0:
        return []

    job = _LabelJob(
        template=t,
        spec=spec,
        seed=seed,
        tolerances=tolerances or SolverTolerances(),
        max_variables=max_variables,
        max_attempts=max_attempts_per_sample,
    )
    outcomes: list[_LabelOutcome] = WorkerPool(workers, log).map(partial(_label_one, job), range(count))

    draws: int = sum(o.attempts for o in outcomes)
    discarded: int = draws - sum(1 for o in outcomes if o.sample is not None)
    ratio: float = discarded / draws
    log.info(
        f"Base dataset generated problem={t.config.label()} count={count} seed={seed} "
        f"draws={draws} discarded={discarded} workers={workers}"
    )
    exhausted: list[int] = [o.index for o in outcomes if o.sample is None]
    if exhausted or ratio > stall_ratio:
        raise GenerationStalledError(
            f"Generation stalled: {discarded}/{draws} draws discarded, "
            f"{len(exhausted)} samples exhausted {max_attempts_per_sample} attempts."
        )
    return [o.sample for o in outcomes if o.sample is not None]


def augment(s: Sample) -> list[Sample]:
    """
    Expand a sample into its n! permuted variants with transferred labels.

    Variant i has coefficients ``permute_columns(C, Q_{P_i})`` and entry j of its label equals the label of
    ``P_j . P_i`` on the original sample, so no solve is needed. When raw scores are present they are
    transferred the same way and re-ranked. Variant 0 reproduces the sample.

    :param s: Sample.
    :return: n! samples in canonical order.
    :raises DimensionError: If the label length is not n!.
    """
    C: CoefficientMatrix = s.coefficients
    table: np.ndarray = composition_table(C.n)
    if len(s.labels) != table.shape[0]:
        raise DimensionError(f"Sample has {len(s.labels)} labels, expected {table.shape[0]}.")
    out: list[Sample] = []
    for i, Q in enumerate(column_permutations(C.support)):
        source: np.ndarray = table[:, i]
        permuted: CoefficientMatrix = permute_columns(C, Q)
        if s.scores is not None:
            scores: np.ndarray = s.scores[source]
            out.append(Sample(permuted, rank_from_scores(scores), scores))
        else:
            out.append(Sample(permuted, RankVector(s.labels.values[source])))
    return out


def augment_all(samples: Sequence[Sample]) -> list[Sample]:
    return [variant for s in samples for variant in augment(s)]


def split(
    samples: Sequence[Sample],
    fractions: tuple[float, float, float] = DEFAULT_SPLIT,
    seed: int = 0,
) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """
    Shuffle base samples and split them into train, validation and test sets.

    Train and validation sizes are rounded; the test set takes the rest. Split base samples before
    augmenting so all variants of one sample land in the same set.

    :param samples: Base samples.
    :param fractions: Train, validation and test fractions.
    :param seed: Shuffle seed.
    :return: Three lists.
    :raises ValueError: If fractions are negative or do not sum to 1.
    """
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"Split fractions must be non-negative and sum to 1 (got {fractions}).")
    count: int = len(samples)
    order: np.ndarray = np.random.default_rng(seed).permutation(count)
    n_train: int = min(count, round(count * fractions[0]))
    n_val: int = min(count - n_train, round(count * fractions[1]))
    picked: list[Sample] = [samples[int(i)] for i in order]
    return picked[:n_train], picked[n_train : n_train + n_val], picked[n_train + n_val :]


def label_scores(scores: Sequence[InstanceScore]) -> np.ndarray:
    return np.asarray([s.score for s in scores], dtype=np.float64)
