from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Sequence, TypeAlias

import numpy as np
import scipy.linalg

from polyperm.domain.errors import DimensionError, NumericError

ExponentVector: TypeAlias = tuple[int, ...]


class Ordering(IntEnum):
    """
    Result of a monomial comparison.

    :cvar LESS: First argument is smaller.
    :cvar EQUAL: Arguments are equal.
    :cvar GREATER: First argument is greater.
    """

    LESS = -1
    EQUAL = 0
    GREATER = 1


def degree(alpha: ExponentVector) -> int:
    """
    Total degree of an exponent vector.

    :param alpha: Exponent vector.
    :return: Sum of entries.
    """
    return sum(alpha)


def grevlex_key(alpha: ExponentVector) -> tuple[int, tuple[int, ...]]:
    """
    Sort key realising grevlex with x1 > x2 > ... > xn.

    Ascending keys mean ascending monomials: degree first, then the negated exponents read from the
    last variable backwards, so a smaller exponent of the last differing variable ranks higher.

    :param alpha: Exponent vector.
    :return: Sort key.
    """
    return sum(alpha), tuple(-a for a in reversed(alpha))


def grevlex_cmp(a: ExponentVector, b: ExponentVector) -> Ordering:
    """
    Compare two exponent vectors in grevlex order.

    ``a > b`` iff ``deg(a) > deg(b)``, or the degrees are equal and the last nonzero entry of ``a - b`` is negative.

    :param a: First exponent vector.
    :param b: Second exponent vector.
    :return: Ordering of ``a`` relative to ``b``.
    :raises DimensionError: If the lengths differ.
    """
    if len(a) != len(b):
        raise DimensionError(f"Exponent vectors have different lengths {len(a)} and {len(b)}.")
    deg_a: int = sum(a)
    deg_b: int = sum(b)
    if deg_a != deg_b:
        return Ordering.GREATER if deg_a > deg_b else Ordering.LESS
    for ai, bi in zip(reversed(a), reversed(b)):
        if ai != bi:
            return Ordering.GREATER if ai < bi else Ordering.LESS
    return Ordering.EQUAL


def sort_grevlex_descending(entries: Sequence[ExponentVector]) -> list[ExponentVector]:
    """
    Sort exponent vectors in grevlex-descending order.

    :param entries: Exponent vectors of equal length.
    :return: New sorted list.
    """
    return sorted(entries, key=grevlex_key, reverse=True)


def monomials_up_to(n: int, d: int) -> list[ExponentVector]:
    """
    All exponent vectors in n variables of total degree <= d, grevlex-descending.

    :param n: Variable count.
    :param d: Maximum total degree (negative yields an empty list).
    :return: Exponent vectors.
    """
    out: list[ExponentVector] = []
    for total in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            alpha: list[int] = [0] * n
            for var in combo:
                alpha[var] += 1
            out.append(tuple(alpha))
    return sort_grevlex_descending(out)


def multiply(a: ExponentVector, b: ExponentVector) -> ExponentVector:
    """
    Exponent vector of the product of two monomials.

    :param a: First exponent vector.
    :param b: Second exponent vector.
    :return: Elementwise sum.
    """
    return tuple(x + y for x, y in zip(a, b))


def monomial_name(alpha: ExponentVector) -> str:
    """
    Human-readable monomial name, e.g. ``x1^2*x3`` or ``1``.

    :param alpha: Exponent vector.
    :return: Name.
    """
    parts: list[str] = []
    for i, a in enumerate(alpha, start=1):
        if a == 1:
            parts.append(f"x{i}")
        elif a > 1:
            parts.append(f"x{i}^{a}")
    return "*".join(parts) if parts else "1"


def parse_monomial_name(name: str, n: int) -> ExponentVector:
    """
    Parse a name produced by ``monomial_name``.

    :param name: Monomial name.
    :param n: Variable count.
    :return: Exponent vector.
    :raises ValueError: If the name is malformed or references a variable outside 1..n.
    """
    raw: str = name.strip()
    alpha: list[int] = [0] * n
    if raw == "1":
        return tuple(alpha)
    for factor in raw.split("*"):
        base, _, power = factor.strip().partition("^")
        if not base.startswith("x") or not base[1:].isdigit():
            raise ValueError(f"Malformed monomial '{name}'.")
        var: int = int(base[1:])
        if not 1 <= var <= n:
            raise ValueError(f"Monomial '{name}' references x{var} outside x1..x{n}.")
        if power and not power.isdigit():
            raise ValueError(f"Malformed exponent in monomial '{name}'.")
        alpha[var - 1] += int(power) if power else 1
    return tuple(alpha)


@dataclass(frozen=True, slots=True)
class SupportSet:
    """
    Ordered set of distinct exponent vectors, strictly grevlex-descending.

    :param entries: Exponent vectors.
    :raises DimensionError: If entries have different lengths.
    :raises ValueError: If entries are negative, duplicated or not strictly descending.
    """

    entries: tuple[ExponentVector, ...]
    _index: dict[ExponentVector, int] = field(init=False, repr=False, compare=False)
    _factor_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries: tuple[ExponentVector, ...] = tuple(tuple(int(a) for a in alpha) for alpha in self.entries)
        object.__setattr__(self, "entries", entries)
        if entries:
            n: int = len(entries[0])
            if any(len(alpha) != n for alpha in entries):
                raise DimensionError("All exponent vectors of a support must have the same length.")
            if any(a < 0 for alpha in entries for a in alpha):
                raise ValueError("Exponents must be non-negative.")
        for prev, cur in zip(entries, entries[1:]):
            if grevlex_cmp(prev, cur) != Ordering.GREATER:
                raise ValueError("Support entries must be distinct and strictly grevlex-descending.")
        object.__setattr__(self, "_index", {alpha: i for i, alpha in enumerate(entries)})
        object.__setattr__(self, "_factor_index", _build_factor_index(entries))

    @classmethod
    def from_unsorted(cls, entries: Sequence[ExponentVector]) -> SupportSet:
        """
        Build a support from exponent vectors in any order.

        :param entries: Exponent vectors (duplicates are removed).
        :return: SupportSet.
        """
        return cls(tuple(sort_grevlex_descending(list(dict.fromkeys(tuple(e) for e in entries)))))

    @property
    def n(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @property
    def max_degree(self) -> int:
        return max((sum(alpha) for alpha in self.entries), default=0)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ExponentVector]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> ExponentVector:
        return self.entries[i]

    def __contains__(self, alpha: object) -> bool:
        return alpha in self._index

    def index_of(self, alpha: ExponentVector) -> int | None:
        """
        Position of an exponent vector, None when absent.

        :param alpha: Exponent vector.
        :return: Index or None.
        """
        return self._index.get(tuple(alpha))

    def names(self) -> list[str]:
        """
        Monomial names in support order.

        :return: Names.
        """
        return [monomial_name(alpha) for alpha in self.entries]

    def factor_index(self) -> np.ndarray:
        """
        Variable index of every factor of every monomial, padded with ``n`` (the slot of the value 1.0).

        :return: Integer array of shape ``(h, max_degree)``.
        """
        return self._factor_index


def _build_factor_index(entries: tuple[ExponentVector, ...]) -> np.ndarray:
    if not entries:
        return np.zeros((0, 0), dtype=np.intp)
    n: int = len(entries[0])
    width: int = max(1, max(sum(alpha) for alpha in entries))
    out: np.ndarray = np.full((len(entries), width), n, dtype=np.intp)
    for row, alpha in enumerate(entries):
        col: int = 0
        for var, a in enumerate(alpha):
            out[row, col : col + a] = var
            col += a
    return out


def enumerate_dense_support(n: int, d: int) -> SupportSet:
    """
    All monomials of total degree <= d in n variables, grevlex-descending.

    :param n: Variable count (>= 1).
    :param d: Maximum degree (>= 0).
    :return: SupportSet of size ``binomial(n + d, n)``.
    :raises ValueError: If n < 1 or d < 0.
    """
    if n < 1 or d < 0:
        raise ValueError(f"Dense support needs n >= 1 and d >= 0 (got n={n}, d={d}).")
    return SupportSet(tuple(monomials_up_to(n, d)))


@dataclass(frozen=True, slots=True)
class CoefficientMatrix:
    """
    Coefficients of an m-equation system, columns aligned to a support.

    :param values: ``m x h`` float64 matrix (copied and made read-only).
    :param support: Support aligning the columns.
    :raises DimensionError: If the matrix is not 2-D or the column count differs from the support size.
    """

    values: np.ndarray
    support: SupportSet

    def __post_init__(self) -> None:
        values: np.ndarray = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"Coefficient matrix must be 2-D, got shape {values.shape}.")
        if values.shape[1] != len(self.support):
            raise DimensionError(f"Coefficient matrix has {values.shape[1]} columns, support has {len(self.support)}.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return int(self.values.shape[0])

    @property
    def h(self) -> int:
        return int(self.values.shape[1])

    @property
    def n(self) -> int:
        return self.support.n

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def vec(self) -> np.ndarray:
        """
        Row-major vectorization.

        :return: Vector of length ``m * h``.
        """
        return self.values.reshape(-1)


def monomial_values(support: SupportSet, x: np.ndarray) -> np.ndarray:
    """
    Evaluate every monomial of a support at a point.

    The factors of each monomial are multiplied in ascending order of value, so the result depends only on
    the multiset of factors; evaluating a permuted monomial at the correspondingly permuted point gives
    bitwise the same number.

    :param support: Support.
    :param x: Point of length n (real or complex).
    :return: Vector of length h.
    :raises DimensionError: If the point has the wrong length.
    """
    point: np.ndarray = np.asarray(x)
    if point.ndim != 1 or point.shape[0] != support.n:
        raise DimensionError(f"Point has shape {point.shape}, expected ({support.n},).")
    extended: np.ndarray = np.concatenate([point, np.ones(1, dtype=point.dtype)])
    factors: np.ndarray = np.sort(extended[support.factor_index()], axis=1)
    out: np.ndarray = factors[:, 0].copy()
    for k in range(1, factors.shape[1]):
        out = out * factors[:, k]
    return out


def signed_residuals(C: CoefficientMatrix, x: np.ndarray) -> np.ndarray:
    """
    Signed algebraic residuals ``sum_i C[j, i] * x^alpha_i``.

    Each equation is summed with correctly rounded summation, so the result does not depend on column order.

    :param C: Coefficient matrix.
    :param x: Real point of length n.
    :return: Vector of length m.
    :raises NumericError: If a coordinate is not finite.
    """
    point: np.ndarray = np.asarray(x, dtype=np.float64)
    if point.ndim != 1 or point.shape[0] != C.n:
        raise DimensionError(f"Point has shape {point.shape}, expected ({C.n},).")
    if not np.all(np.isfinite(point)):
        raise NumericError("Point coordinates must be finite.")
    mono: np.ndarray = monomial_values(C.support, point)
    terms: np.ndarray = C.values * mono[np.newaxis, :]
    return np.array([math.fsum(row) for row in terms], dtype=np.float64)


def evaluate_residuals(C: CoefficientMatrix, x: np.ndarray) -> np.ndarray:
    """
    Absolute algebraic residual of each equation at a real point.

    :param C: Coefficient matrix.
    :param x: Real point of length n.
    :return: Vector of length m with ``|f_j(x)|``.
    :raises NumericError: If a coordinate is not finite.
    """
    return np.abs(signed_residuals(C, x))


def jacobian(C: CoefficientMatrix, x: np.ndarray) -> np.ndarray:
    """
    Jacobian of the system at a real point.

    :param C: Coefficient matrix.
    :param x: Real point of length n.
    :return: ``m x n`` matrix.
    """
    point: np.ndarray = np.asarray(x, dtype=np.float64)
    out: np.ndarray = np.zeros((C.m, C.n), dtype=np.float64)
    for k in range(C.n):
        for i, alpha in enumerate(C.support):
            a: int = alpha[k]
            if a == 0:
                continue
            reduced: list[int] = list(alpha)
            reduced[k] -= 1
            out[:, k] += C.values[:, i] * a * float(np.prod(point ** np.array(reduced, dtype=np.float64)))
    return out


def newton_refine(
    C: CoefficientMatrix, x: np.ndarray, max_iter: int = 20, tol: float = 1e-14
) -> tuple[np.ndarray, float]:
    """
    Newton refinement of a real root of a square system.

    Only used as an independent check of solver output; the scored solve path never polishes roots.

    :param C: Coefficient matrix (m == n).
    :param x: Starting point.
    :param max_iter: Maximum iterations.
    :param tol: Stop when the largest absolute residual is below this value.
    :return: Refined point and its largest absolute residual.
    :raises DimensionError: If the system is not square.
    """
    if C.m != C.n:
        raise DimensionError(f"Newton refinement needs a square system (m={C.m}, n={C.n}).")
    point: np.ndarray = np.array(x, dtype=np.float64, copy=True)
    res: np.ndarray = signed_residuals(C, point)
    for _ in range(max_iter):
        if float(np.max(np.abs(res))) < tol:
            break
        J: np.ndarray = jacobian(C, point)
        try:
            step: np.ndarray = scipy.linalg.solve(J, res)
        except (np.linalg.LinAlgError, ValueError):
            break
        point = point - step
        if not np.all(np.isfinite(point)):
            break
        res = signed_residuals(C, point)
    return point, float(np.max(np.abs(res)))


def plant_root(values: np.ndarray, support: SupportSet, root: np.ndarray) -> CoefficientMatrix:
    """
    Adjust the constant column so that ``root`` is a common root of every equation.

    ``c_{j,const} = -sum_{i != const} c_{j,i} * root^alpha_i``.

    :param values: ``m x h`` coefficients; the constant column is overwritten in a copy.
    :param support: Support containing the constant monomial.
    :param root: Real point of length n.
    :return: CoefficientMatrix with the planted root.
    :raises ValueError: If the support has no constant monomial.
    """
    const: int | None = support.index_of((0,) * support.n)
    if const is None:
        raise ValueError("Support has no constant monomial; a root cannot be planted.")
    out: np.ndarray = np.array(values, dtype=np.float64, copy=True)
    mono: np.ndarray = monomial_values(support, np.asarray(root, dtype=np.float64))
    out[:, const] = 0.0
    for j in range(out.shape[0]):
        out[j, const] = -math.fsum(out[j] * mono)
    return CoefficientMatrix(out, support)
