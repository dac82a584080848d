from __future__ import annotations

import math

import numpy as np
import pytest

from polyperm.domain.errors import AllFailedError, CapacityError
from polyperm.domain.oracle import (
    InstanceScore,
    RankVector,
    best_permutation,
    rank_from_scores,
    rank_permutations,
    score_permutation,
    score_solution,
)
from polyperm.domain.perm import composition_table, enumerate_permutations, induced_column_perm, permute_columns
from polyperm.domain.poly import CoefficientMatrix
from polyperm.domain.solver import SolverTemplate, solve_instance
from tests.conftest import PlantedFactory


def test_rank_from_scores_orders_ascending() -> None:
    np.testing.assert_array_equal(rank_from_scores([3.0, 1.0, 2.0]).values, [0.0, 1.0, 0.5])


def test_rank_from_scores_ties_and_failures() -> None:
    np.testing.assert_array_equal(rank_from_scores([1.0, 1.0]).values, [1.0, 0.0])
    np.testing.assert_array_equal(rank_from_scores([math.inf, 2.0, math.inf]).values, [0.5, 1.0, 0.0])
    np.testing.assert_array_equal(rank_from_scores([7.0]).values, [1.0])


def test_rank_from_scores_rejects_bad_input() -> None:
    with pytest.raises(ValueError):
        rank_from_scores([])
    with pytest.raises(ValueError):
        rank_from_scores([1.0, math.nan])


def test_rank_vector_values_are_a_grid() -> None:
    rank = rank_from_scores(np.random.default_rng(0).random(24))
    np.testing.assert_allclose(np.sort(rank.values), np.arange(24) / 23)
    assert rank.order()[0] == best_permutation(rank)
    assert rank == RankVector(rank.values.copy())
    assert rank != RankVector(rank.values[::-1].copy())


def test_best_permutation_tie_break() -> None:
    assert best_permutation([0.2, 0.9, 0.9]) == 1
    assert best_permutation(np.zeros(6)) == 0
    assert best_permutation(RankVector(np.array([0.0, 1.0]))) == 1


def test_instance_score_failure() -> None:
    failed = InstanceScore.failure("NearDegenerateInstanceError")
    assert failed.failed
    assert failed.real_root_count == 0
    assert not InstanceScore(score=1e-9, real_root_count=2).failed


def test_score_of_planted_instance(template_3x3: SolverTemplate, planted: PlantedFactory) -> None:
    inst = planted(template_3x3, np.random.default_rng(1))
    solution = solve_instance(inst.coefficients, template_3x3)
    score = score_solution(inst.coefficients, solution)
    assert score.real_root_count == solution.real_roots.shape[0]
    assert 0.0 <= score.score < 1e-6


def test_score_permutation_folds_errors(template_2x2: SolverTemplate) -> None:
    zero = CoefficientMatrix(np.zeros((2, len(template_2x2.support))), template_2x2.support)
    score = score_permutation(zero, template_2x2, enumerate_permutations(2)[1])
    assert score.failed
    assert score.error == "NearDegenerateInstanceError"
    with pytest.raises(AllFailedError):
        rank_permutations(zero, template_2x2)


def test_rank_permutations(template_3x3: SolverTemplate, planted: PlantedFactory) -> None:
    inst = planted(template_3x3, np.random.default_rng(2))
    rank, scores = rank_permutations(inst.coefficients, template_3x3)
    assert len(rank) == len(scores) == 6
    assert rank.values[best_permutation(rank)] == 1.0
    finite = [s.score for s in scores if not s.failed]
    assert finite
    assert scores[best_permutation(rank)].score == min(s.score for s in scores)


def test_rank_permutations_capacity(template_3x3: SolverTemplate, planted: PlantedFactory) -> None:
    inst = planted(template_3x3, np.random.default_rng(3))
    with pytest.raises(CapacityError):
        rank_permutations(inst.coefficients, template_3x3, max_variables=2)


@pytest.mark.parametrize("fixture", ["template_2x2", "template_3x3"])
def test_label_transfer_is_bitwise(request: pytest.FixtureRequest, fixture: str) -> None:
    t: SolverTemplate = request.getfixturevalue(fixture)
    perms = enumerate_permutations(t.config.n)
    table = composition_table(t.config.n)
    rng = np.random.default_rng(41)
    for _ in range(100):
        C = CoefficientMatrix(rng.uniform(-1.0, 1.0, size=(t.config.m, len(t.support))), t.support)
        a = int(rng.integers(len(perms)))
        b = int(rng.integers(len(perms)))
        variant = permute_columns(C, induced_column_perm(perms[a], t.support))
        transferred = score_permutation(variant, t, perms[b])
        direct = score_permutation(C, t, perms[table[b, a]])
        assert transferred.score == direct.score or (transferred.failed and direct.failed)
        assert transferred.real_root_count == direct.real_root_count

        try:
            _, own = rank_permutations(C, t)
        except AllFailedError:
            continue
        _, moved = rank_permutations(variant, t)
        own_scores = [s.score for s in own]
        assert [s.score for s in moved] == [own_scores[table[k, a]] for k in range(len(perms))]
        if len(set(own_scores)) == len(own_scores):
            rank = rank_from_scores(own_scores)
            np.testing.assert_array_equal(rank_from_scores([s.score for s in moved]).values, rank.values[table[:, a]])


@pytest.mark.parametrize("power", [-3, 5])
def test_rank_is_invariant_to_power_of_two_scaling(
    template_3x3: SolverTemplate, planted: PlantedFactory, power: int
) -> None:
    rng = np.random.default_rng(8)
    for _ in range(10):
        C = planted(template_3x3, rng).coefficients
        scaled = CoefficientMatrix(C.values * 2.0**power, C.support)
        rank, scores = rank_permutations(C, template_3x3)
        scaled_rank, scaled_scores = rank_permutations(scaled, template_3x3)
        assert rank.order() == scaled_rank.order()
        np.testing.assert_array_equal(rank.values, scaled_rank.values)
        assert [s.score * 2.0**power for s in scores] == [s.score for s in scaled_scores]
