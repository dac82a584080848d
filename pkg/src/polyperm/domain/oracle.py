from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from polyperm.domain.errors import AllFailedError, PolypermError
from polyperm.domain.perm import DEFAULT_MAX_VARIABLES, VariablePermutation, enumerate_permutations
from polyperm.domain.poly import CoefficientMatrix, evaluate_residuals
from polyperm.domain.solver import SolutionSet, SolverTemplate, SolverTolerances, solve_with_permutation


@dataclass(frozen=True, slots=True)
class InstanceScore:
    """
    Quality of one permutation on one instance.

    :param score: Mean over real roots of the mean absolute residual per equation, ``inf`` when failed.
    :param real_root_count: Number of real roots that were scored.
    :param error: Name of the solver error that caused the failure, if any.
    """

    score: float
    real_root_count: int
    error: str | None = None

    @classmethod
    def failure(cls, error: str | None = None) -> InstanceScore:
        return cls(score=math.inf, real_root_count=0, error=error)

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.score)


@dataclass(frozen=True, slots=True, eq=False)
class RankVector:
    """
    Per-permutation quality in [0, 1], aligned with ``enumerate_permutations``; 1 marks the best.

    :param values: Exactly one entry per value ``k / (n! - 1)``.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values: np.ndarray = np.array(self.values, dtype=np.float64, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RankVector) and np.array_equal(self.values, other.values)

    def order(self) -> list[int]:
        """
        Permutation indices from best to worst.

        :return: Indices sorted by descending value, ties in index order.
        """
        return [int(i) for i in np.argsort(-self.values, kind="stable")]


def score_solution(C: CoefficientMatrix, solution: SolutionSet) -> InstanceScore:
    """
    Score already back-permuted roots against the original equations.

    :param C: Original instance.
    :param solution: Roots referring to the variables of ``C``.
    :return: InstanceScore, failed when there are no real roots.
    """
    if not solution.has_real_roots:
        return InstanceScore.failure()
    per_root: list[float] = [float(np.mean(evaluate_residuals(C, root))) for root in solution.real_roots]
    return InstanceScore(score=float(np.mean(per_root)), real_root_count=len(per_root))


def score_permutation(
    C: CoefficientMatrix,
    t: SolverTemplate,
    P: VariablePermutation,
    tolerances: SolverTolerances | None = None,
) -> InstanceScore:
    """
    Solve with permutation P and score the real roots against the original C.

    Solver errors are folded into a failed score.

    :param C: Instance.
    :param t: Template.
    :param P: Variable permutation.
    :param tolerances: Numerical thresholds.
    :return: InstanceScore.
    """
    try:
        solution: SolutionSet = solve_with_permutation(C, t, P, tolerances)
        return score_solution(C, solution)
    except PolypermError as exc:
        return InstanceScore.failure(type(exc).__name__)


def rank_from_scores(scores: Sequence[float]) -> RankVector:
    """
    Turn raw scores into a RankVector.

    Scores are sorted ascending with a stable sort (``inf`` last); the permutation at rank r receives
    ``(K - 1 - r) / (K - 1)``.

    :param scores: One score per permutation, ``inf`` for failures.
    :return: RankVector.
    :raises ValueError: If no scores are given or a score is NaN.
    """
    arr: np.ndarray = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("At least one score is required.")
    if np.any(np.isnan(arr)):
        raise ValueError("Scores must not be NaN.")
    k: int = int(arr.size)
    values: np.ndarray = np.empty(k, dtype=np.float64)
    if k == 1:
        values[0] = 1.0
        return RankVector(values)
    order: np.ndarray = np.argsort(arr, kind="stable")
    values[order] = (k - 1 - np.arange(k)) / (k - 1)
    return RankVector(values)


def rank_permutations(
    C: CoefficientMatrix,
    t: SolverTemplate,
    tolerances: SolverTolerances | None = None,
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> tuple[RankVector, list[InstanceScore]]:
    """
    Brute-force every permutation and rank them.

    :param C: Instance.
    :param t: Template.
    :param tolerances: Numerical thresholds.
    :param max_variables: Capacity cap on n.
    :return: RankVector and the scores in canonical order.
    :raises CapacityError: If n exceeds the cap.
    :raises AllFailedError: If every permutation failed.
    """
    perms: tuple[VariablePermutation, ...] = enumerate_permutations(C.n, max_variables)
    scores: list[InstanceScore] = [score_permutation(C, t, P, tolerances) for P in perms]
    if all(s.failed for s in scores):
        raise AllFailedError(f"All {len(perms)} permutations failed to produce a real root.")
    return rank_from_scores([s.score for s in scores]), scores


def best_permutation(rank: RankVector | Sequence[float]) -> int:
    """
    Index of the best permutation; ties go to the lowest index.

    :param rank: RankVector or classifier output.
    :return: Canonical permutation index.
    """
    values: np.ndarray = rank.values if isinstance(rank, RankVector) else np.asarray(rank, dtype=np.float64)
    return int(np.argmax(values))
