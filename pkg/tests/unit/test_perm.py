from __future__ import annotations

import math

import numpy as np
import pytest

from polyperm.domain.errors import CapacityError, DimensionError, NotInvariantError
from polyperm.domain.perm import (
    VariablePermutation,
    back_permute_solution,
    column_permutations,
    composition_table,
    enumerate_permutations,
    format_permutation,
    induced_column_perm,
    is_support_invariant,
    is_system_invariant,
    parse_permutation,
    permutation_index,
    permute_columns,
)
from polyperm.domain.poly import CoefficientMatrix, SupportSet, enumerate_dense_support, evaluate_residuals


def test_enumeration_is_lexicographic() -> None:
    perms = enumerate_permutations(3)
    assert [p.image for p in perms] == [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    assert perms[0].is_identity()
    assert len(enumerate_permutations(4)) == 24
    assert enumerate_permutations(1)[0].image == (0,)


def test_enumeration_capacity() -> None:
    with pytest.raises(CapacityError):
        enumerate_permutations(7, max_variables=6)
    with pytest.raises(ValueError):
        enumerate_permutations(0)


def test_invalid_permutation() -> None:
    with pytest.raises(ValueError):
        VariablePermutation((0, 0, 1))
    with pytest.raises(ValueError):
        parse_permutation("1,2,4")
    with pytest.raises(ValueError):
        parse_permutation("0,1")


def test_text_notation() -> None:
    P = parse_permutation("2,1,3")
    assert P.image == (1, 0, 2)
    assert format_permutation(P) == "2,1,3"


def test_matrix_view_and_transpose() -> None:
    P = VariablePermutation((1, 2, 0))
    v = np.array([10.0, 20.0, 30.0])
    np.testing.assert_array_equal(P.matrix().T @ v, P.apply_transpose(v))
    np.testing.assert_array_equal((P @ P.inverse()).image, (0, 1, 2))
    assert (P @ P.transpose()).is_identity()


def test_composition_matches_matrix_product() -> None:
    for a in enumerate_permutations(3):
        for b in enumerate_permutations(3):
            np.testing.assert_array_equal((b @ a).matrix(), b.matrix() @ a.matrix())


def test_composition_size_mismatch() -> None:
    with pytest.raises(DimensionError):
        VariablePermutation((0, 1)) @ VariablePermutation((0, 1, 2))


def test_swap_on_two_variables() -> None:
    support = enumerate_dense_support(2, 1)
    Q = induced_column_perm(VariablePermutation.swap(2, 0, 1), support)
    assert Q.indices == (1, 0, 2)
    C = CoefficientMatrix(np.array([[1.0, 2.0, 3.0]]), support)
    assert permute_columns(C, Q).values.tolist() == [[2.0, 1.0, 3.0]]


def test_swap_on_two_variables_of_degree_two() -> None:
    support = enumerate_dense_support(2, 2)
    assert support.names() == ["x1^2", "x1*x2", "x2^2", "x1", "x2", "1"]
    Q = induced_column_perm(VariablePermutation.swap(2, 0, 1), support)
    assert Q.indices == (2, 1, 0, 4, 3, 5)
    C = CoefficientMatrix(np.array([[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]), support)
    assert permute_columns(C, Q).values.tolist() == [[3.0, 2.0, 1.0, 5.0, 4.0, 6.0]]


def test_identity_column_perm() -> None:
    support = enumerate_dense_support(3, 3)
    Q = induced_column_perm(VariablePermutation.identity(3), support)
    assert Q.indices == tuple(range(len(support)))


def test_dense_supports_are_invariant() -> None:
    for n, d in ((3, 3), (4, 2), (2, 4)):
        support = enumerate_dense_support(n, d)
        assert all(is_support_invariant(support, P) for P in enumerate_permutations(n))
        assert len(column_permutations(support)) == math.factorial(n)


def test_sparse_support_not_invariant() -> None:
    support = SupportSet(((1, 0), (0, 0)))
    swap = VariablePermutation.swap(2, 0, 1)
    assert not is_support_invariant(support, swap)
    assert not is_system_invariant([enumerate_dense_support(2, 1), support], swap)
    assert is_system_invariant([], swap)
    with pytest.raises(NotInvariantError):
        induced_column_perm(swap, support)


def test_permutation_size_mismatch() -> None:
    with pytest.raises(DimensionError):
        induced_column_perm(VariablePermutation.identity(2), enumerate_dense_support(3, 1))


def test_column_permutation_composition_holds_bitwise() -> None:
    rng = np.random.default_rng(0)
    support = enumerate_dense_support(3, 3)
    perms = enumerate_permutations(3)
    for _ in range(100):
        C = CoefficientMatrix(rng.standard_normal((3, len(support))), support)
        a, b = (perms[int(i)] for i in rng.integers(len(perms), size=2))
        twice = permute_columns(permute_columns(C, induced_column_perm(a, support)), induced_column_perm(b, support))
        once = permute_columns(C, induced_column_perm(b @ a, support))
        np.testing.assert_array_equal(twice.values, once.values)


def test_back_permutation_maps_roots() -> None:
    rng = np.random.default_rng(4)
    support = enumerate_dense_support(3, 2)
    C = CoefficientMatrix(rng.standard_normal((3, len(support))), support)
    x = np.array([0.3, -0.7, 1.1])
    for P in enumerate_permutations(3):
        permuted = permute_columns(C, induced_column_perm(P, support))
        y = P.inverse().apply_transpose(x)
        np.testing.assert_array_equal(back_permute_solution(y, P), x)
        np.testing.assert_array_equal(evaluate_residuals(permuted, y), evaluate_residuals(C, x))


def test_composition_table() -> None:
    table = composition_table(3)
    lookup = permutation_index(3)
    perms = enumerate_permutations(3)
    assert table.shape == (6, 6)
    for b, pb in enumerate(perms):
        assert table[b, 0] == b
        for a, pa in enumerate(perms):
            assert table[b, a] == lookup[(pb @ pa).image]
