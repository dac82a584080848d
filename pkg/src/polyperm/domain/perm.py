from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from polyperm.domain.errors import CapacityError, DimensionError, NotInvariantError
from polyperm.domain.poly import CoefficientMatrix, ExponentVector, SupportSet
from polyperm.utils.env import parse_image_sequence

DEFAULT_MAX_VARIABLES: int = 6


@dataclass(frozen=True, slots=True)
class VariablePermutation:
    """
    Bijection on the variable indices, stored as a 0-based image sequence.

    The matrix view ``P`` maps ``e_j`` to ``e_image[j]``; hence ``(P^T v)_i = v[image[i]]``.

    :param image: Image sequence, a permutation of ``0..n-1``.
    :raises ValueError: If the sequence is not a permutation.
    """

    image: tuple[int, ...]

    def __post_init__(self) -> None:
        image: tuple[int, ...] = tuple(int(i) for i in self.image)
        if sorted(image) != list(range(len(image))):
            raise ValueError(f"{image} is not a permutation of 0..{len(image) - 1}.")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, n: int) -> VariablePermutation:
        return cls(tuple(range(n)))

    @classmethod
    def from_text(cls, raw: str) -> VariablePermutation:
        """
        Parse the 1-based CLI notation, e.g. ``"2,1,3"``.

        :param raw: Text.
        :return: VariablePermutation.
        :raises ValueError: If the text is not a permutation.
        """
        return cls(parse_image_sequence(raw))

    @classmethod
    def swap(cls, n: int, i: int, j: int) -> VariablePermutation:
        """
        Transposition of two 0-based variable indices.

        :param n: Variable count.
        :param i: First index.
        :param j: Second index.
        :return: VariablePermutation.
        """
        image: list[int] = list(range(n))
        image[i], image[j] = image[j], image[i]
        return cls(tuple(image))

    @property
    def n(self) -> int:
        return len(self.image)

    def is_identity(self) -> bool:
        return all(i == k for k, i in enumerate(self.image))

    def matrix(self) -> np.ndarray:
        """
        Permutation matrix ``P`` with ``P[image[j], j] = 1``.

        :return: ``n x n`` float64 matrix.
        """
        out: np.ndarray = np.zeros((self.n, self.n), dtype=np.float64)
        out[list(self.image), list(range(self.n))] = 1.0
        return out

    def __matmul__(self, other: VariablePermutation) -> VariablePermutation:
        """
        Matrix product ``self . other``.

        :param other: Right factor.
        :return: Composition applying ``other`` first.
        :raises DimensionError: If sizes differ.
        """
        if self.n != other.n:
            raise DimensionError(f"Cannot compose permutations of sizes {self.n} and {other.n}.")
        return VariablePermutation(tuple(self.image[j] for j in other.image))

    def inverse(self) -> VariablePermutation:
        inv: list[int] = [0] * self.n
        for j, i in enumerate(self.image):
            inv[i] = j
        return VariablePermutation(tuple(inv))

    def transpose(self) -> VariablePermutation:
        return self.inverse()

    def apply_transpose(self, v: Sequence[int] | np.ndarray) -> tuple[int, ...] | np.ndarray:
        """
        Compute ``P^T v``.

        :param v: Exponent vector (tuple) or point (array).
        :return: Same kind as the input.
        :raises DimensionError: If the length differs from n.
        """
        if len(v) != self.n:
            raise DimensionError(f"Vector of length {len(v)} cannot be permuted by a {self.n}-permutation.")
        if isinstance(v, np.ndarray):
            return v[list(self.image)]
        return tuple(v[i] for i in self.image)

    def __str__(self) -> str:
        return ",".join(str(i + 1) for i in self.image)


@dataclass(frozen=True, slots=True)
class ColumnPermutation:
    """
    Column index map induced on a support by a variable permutation.

    :param indices: Entry ``i`` is the source column of result column ``i``.
    :raises ValueError: If indices are not a permutation of ``0..h-1``.
    """

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        indices: tuple[int, ...] = tuple(int(i) for i in self.indices)
        if sorted(indices) != list(range(len(indices))):
            raise ValueError("Column permutation must be a permutation of 0..h-1.")
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


def induced_column_perm(P: VariablePermutation, o: SupportSet) -> ColumnPermutation:
    """
    Column map ``c'_i = c_{findindex(P^T alpha_i, o)}``.

    :param P: Variable permutation.
    :param o: Support.
    :return: ColumnPermutation.
    :raises DimensionError: If the permutation size differs from the support's variable count.
    :raises NotInvariantError: If some ``P^T alpha_i`` is not in the support.
    """
    if len(o) and P.n != o.n:
        raise DimensionError(f"Permutation of size {P.n} does not match support in {o.n} variables.")
    indices: list[int] = []
    for alpha in o:
        beta: ExponentVector = P.apply_transpose(alpha)  # type: ignore[assignment]
        idx: int | None = o.index_of(beta)
        if idx is None:
            raise NotInvariantError(f"Support is not invariant under permutation {P}: {beta} missing.")
        indices.append(idx)
    return ColumnPermutation(tuple(indices))


def permute_columns(C: CoefficientMatrix, Q: ColumnPermutation) -> CoefficientMatrix:
    """
    Reorder coefficient columns: column ``i`` of the result is column ``Q[i]`` of ``C``.

    :param C: Coefficient matrix.
    :param Q: Column permutation.
    :return: New coefficient matrix over the same support.
    :raises DimensionError: If the lengths differ.
    """
    if len(Q) != C.h:
        raise DimensionError(f"Column permutation of length {len(Q)} does not match {C.h} columns.")
    return CoefficientMatrix(C.values[:, Q.as_array()], C.support)


def is_support_invariant(o: SupportSet, P: VariablePermutation) -> bool:
    """
    Whether ``P^T alpha`` lies in the support for every ``alpha`` of the support.

    :param o: Support.
    :param P: Variable permutation.
    :return: True if the support is closed under P.
    """
    if len(o) == 0:
        return True
    if P.n != o.n:
        return False
    return all(P.apply_transpose(alpha) in o for alpha in o)


def is_system_invariant(system: Sequence[SupportSet], P: VariablePermutation) -> bool:
    """
    Whether every equation's own support is invariant under P.

    :param system: Per-equation supports.
    :param P: Variable permutation.
    :return: True if all supports are invariant (vacuously true for an empty system).
    """
    return all(is_support_invariant(o, P) for o in system)


def back_permute_solution(x: np.ndarray, P: VariablePermutation) -> np.ndarray:
    """
    Map a root of the P-permuted system to a root of the original system (``P^T x``).

    :param x: Point of length n (real or complex).
    :param P: Variable permutation.
    :return: Back-permuted point.
    """
    return P.apply_transpose(np.asarray(x))  # type: ignore[return-value]


@lru_cache(maxsize=16)
def _all_permutations(n: int) -> tuple[VariablePermutation, ...]:
    return tuple(VariablePermutation(image) for image in itertools.permutations(range(n)))


def enumerate_permutations(n: int, max_variables: int = DEFAULT_MAX_VARIABLES) -> tuple[VariablePermutation, ...]:
    """
    All n! permutations in lexicographic order of their image sequences (index 0 is the identity).

    :param n: Variable count.
    :param max_variables: Capacity cap on n.
    :return: Permutations in canonical order.
    :raises CapacityError: If n exceeds the cap.
    :raises ValueError: If n < 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1 (got {n}).")
    if n > max_variables:
        raise CapacityError(f"n={n} exceeds the permutation capacity of {max_variables} variables.")
    return _all_permutations(n)


@lru_cache(maxsize=16)
def permutation_index(n: int) -> dict[tuple[int, ...], int]:
    """
    Canonical index of every permutation image of size n.

    :param n: Variable count.
    :return: Mapping from image sequence to canonical index.
    """
    return {p.image: k for k, p in enumerate(_all_permutations(n))}


@lru_cache(maxsize=16)
def composition_table(n: int) -> np.ndarray:
    """
    Canonical index of ``P_b . P_a`` for every pair.

    :param n: Variable count.
    :return: ``n! x n!`` integer array indexed ``[b, a]``.
    """
    perms: tuple[VariablePermutation, ...] = _all_permutations(n)
    lookup: dict[tuple[int, ...], int] = permutation_index(n)
    table: np.ndarray = np.empty((len(perms), len(perms)), dtype=np.intp)
    for b, pb in enumerate(perms):
        for a, pa in enumerate(perms):
            table[b, a] = lookup[(pb @ pa).image]
    table.setflags(write=False)
    return table


@lru_cache(maxsize=32)
def column_permutations(support: SupportSet) -> tuple[ColumnPermutation, ...]:
    """
    Induced column permutations of every canonical variable permutation.

    :param support: Support in n variables.
    :return: Column permutations in canonical order.
    :raises NotInvariantError: If the support is not invariant under some permutation.
    """
    return tuple(induced_column_perm(P, support) for P in _all_permutations(support.n))


def parse_permutation(raw: str) -> VariablePermutation:
    """
    Parse the 1-based text notation, e.g. ``"2,1,3"``.

    :param raw: Text.
    :return: VariablePermutation.
    """
    return VariablePermutation.from_text(raw)


def format_permutation(P: VariablePermutation) -> str:
    return str(P)
