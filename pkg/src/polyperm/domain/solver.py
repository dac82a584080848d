from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from polyperm.domain.errors import (
    CapacityError,
    DimensionError,
    EigenFailureError,
    NearDegenerateInstanceError,
    NumericError,
    TemplateGenerationError,
)
from polyperm.domain.models import ProblemConfig, TemplateDocument
from polyperm.domain.perm import ColumnPermutation, VariablePermutation, induced_column_perm, permute_columns
from polyperm.domain.poly import (
    CoefficientMatrix,
    ExponentVector,
    SupportSet,
    degree,
    enumerate_dense_support,
    monomials_up_to,
    multiply,
)
from polyperm.utils.logging import get_logger

if TYPE_CHECKING:
    from polyperm.config.settings import SolverSettings

TEMPLATE_PIVOT_TOL: float = 1e-9
WELL_CONDITIONED_FACTOR: float = 1e3


@dataclass(frozen=True, slots=True)
class SolverTolerances:
    """
    Numerical thresholds of the online solve.

    :param tau_rank_rel: Pivot threshold relative to the largest entry of the eliminated block.
    :param tau_im: Relative imaginary-part tolerance for real roots.
    :param tau_norm: Minimum magnitude of the eigenvector coordinate of monomial 1.
    """

    tau_rank_rel: float = 1e-12
    tau_im: float = 1e-6
    tau_norm: float = 1e-10

    @classmethod
    def from_settings(cls, cfg: SolverSettings) -> SolverTolerances:
        return cls(tau_rank_rel=cfg.tau_rank_rel, tau_im=cfg.tau_im, tau_norm=cfg.tau_norm)


@dataclass(frozen=True, slots=True)
class SolveDiagnostics:
    """
    Numerical health of one online solve.

    :param min_pivot: Smallest pivot magnitude of the elimination.
    :param max_pivot: Largest pivot magnitude of the elimination.
    :param tau_rank: Absolute pivot threshold that was applied.
    :param eigen_condition: 2-norm condition number of the eigenvector matrix.
    :param discarded: Eigenvectors dropped because their monomial-1 coordinate was too small.
    """

    min_pivot: float
    max_pivot: float
    tau_rank: float
    eigen_condition: float
    discarded: int

    @property
    def well_conditioned(self) -> bool:
        return self.min_pivot >= WELL_CONDITIONED_FACTOR * self.tau_rank


@dataclass(frozen=True, slots=True)
class SolutionSet:
    """
    Roots returned by a solve.

    :param complex_roots: ``k x n`` complex roots, ``k`` at most the Bezout number.
    :param real_roots: ``r x n`` real parts of the roots accepted as real.
    :param diagnostics: Numerical diagnostics.
    """

    complex_roots: np.ndarray
    real_roots: np.ndarray
    diagnostics: SolveDiagnostics

    def __post_init__(self) -> None:
        for name in ("complex_roots", "real_roots"):
            arr: np.ndarray = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def has_real_roots(self) -> bool:
        return self.real_roots.shape[0] > 0


@dataclass(frozen=True, slots=True)
class SolverTemplate:
    """
    Frozen elimination template of a dense problem.

    :param config: Problem the template was generated for.
    :param expansion_degree: Expansion degree D.
    :param columns: All monomials of degree <= D, grevlex-descending.
    :param multipliers: Per-equation multiplier monomials, each of degree <= D - d_j.
    :param basis_indices: Column indices of the quotient basis B.
    :param reducible_indices: Column indices whose normal forms modulo B are computed online.
    :param action_var: 0-based action variable.
    :param one_pos: Position of monomial 1 within B.
    :param var_pos: Position of x_i within B, -1 when x_i is read from its normal form.
    :param seed: Seed of the random instance used to select B.
    :raises ValueError: If the fields are inconsistent.
    """

    config: ProblemConfig
    expansion_degree: int
    columns: SupportSet
    multipliers: tuple[tuple[ExponentVector, ...], ...]
    basis_indices: tuple[int, ...]
    reducible_indices: tuple[int, ...]
    action_var: int
    one_pos: int
    var_pos: tuple[int, ...]
    seed: int = 0
    support: SupportSet = field(init=False, compare=False)
    _sources: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    _targets: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    _elim_cols: np.ndarray = field(init=False, repr=False, compare=False)
    _n_excess: int = field(init=False, repr=False, compare=False)
    _unit_rows: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)
    _reduced_rows: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)
    _var_nf: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        cfg: ProblemConfig = self.config
        n: int = cfg.n
        if self.columns.entries != tuple(monomials_up_to(n, self.expansion_degree)):
            raise ValueError("Template columns must be all monomials of degree <= D in grevlex-descending order.")
        if len(self.multipliers) != cfg.m:
            raise ValueError(f"Expected multipliers for {cfg.m} equations, got {len(self.multipliers)}.")
        for d_j, mults in zip(cfg.degrees, self.multipliers):
            if any(len(mu) != n or degree(mu) > self.expansion_degree - d_j for mu in mults):
                raise ValueError("Multiplier degrees must not exceed D - d_j.")

        h: int = len(self.columns)
        basis: tuple[int, ...] = tuple(int(i) for i in self.basis_indices)
        reducible: tuple[int, ...] = tuple(int(i) for i in self.reducible_indices)
        if len(basis) != cfg.bezout:
            raise ValueError(f"Quotient basis has {len(basis)} monomials, expected {cfg.bezout}.")
        if any(not 0 <= i < h for i in basis + reducible):
            raise ValueError("Basis and reducible indices must refer to template columns.")
        if len(set(basis)) != len(basis) or len(set(reducible)) != len(reducible) or set(basis) & set(reducible):
            raise ValueError("Basis and reducible indices must be distinct and disjoint.")
        if not 0 <= self.action_var < n:
            raise ValueError(f"Action variable {self.action_var} outside 0..{n - 1}.")
        if not 0 <= self.one_pos < len(basis) or any(self.columns[basis[self.one_pos]]):
            raise ValueError("one_pos must locate the constant monomial within the basis.")
        if len(self.var_pos) != n:
            raise ValueError(f"var_pos must have {n} entries.")

        basis_pos: dict[int, int] = {c: k for k, c in enumerate(basis)}
        red_pos: dict[int, int] = {c: k for k, c in enumerate(reducible)}
        var_nf: list[int] = []
        for i, pos in enumerate(self.var_pos):
            col: int = self.columns.index_of(_unit(n, i))  # type: ignore[assignment]
            if pos >= 0:
                if pos >= len(basis) or basis[pos] != col:
                    raise ValueError(f"var_pos[{i}] does not locate x{i + 1} within the basis.")
                var_nf.append(-1)
            elif col in red_pos:
                var_nf.append(red_pos[col])
            else:
                raise ValueError(f"x{i + 1} is neither in the basis nor reducible.")

        e_a: ExponentVector = _unit(n, self.action_var)
        unit_r: list[int] = []
        unit_c: list[int] = []
        red_r: list[int] = []
        red_k: list[int] = []
        for k, col in enumerate(basis):
            target: int | None = self.columns.index_of(multiply(self.columns[col], e_a))
            if target is not None and target in basis_pos:
                unit_r.append(k)
                unit_c.append(basis_pos[target])
            elif target is not None and target in red_pos:
                red_r.append(k)
                red_k.append(red_pos[target])
            else:
                raise ValueError("Every action product x_a * b must lie in the basis or the reducible set.")

        support: SupportSet = enumerate_dense_support(n, cfg.max_degree)
        sources: tuple[np.ndarray, ...] = _equation_sources(support, cfg.degrees)
        excess: list[int] = [c for c in range(h) if c not in basis_pos and c not in red_pos]

        object.__setattr__(self, "basis_indices", basis)
        object.__setattr__(self, "reducible_indices", reducible)
        object.__setattr__(self, "var_pos", tuple(int(p) for p in self.var_pos))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "_sources", sources)
        object.__setattr__(self, "_targets", _expansion_targets(self.columns, self.multipliers, support, sources))
        object.__setattr__(self, "_elim_cols", np.asarray(excess + list(reducible), dtype=np.intp))
        object.__setattr__(self, "_n_excess", len(excess))
        object.__setattr__(self, "_unit_rows", (np.asarray(unit_r, dtype=np.intp), np.asarray(unit_c, dtype=np.intp)))
        object.__setattr__(self, "_reduced_rows", (np.asarray(red_r, dtype=np.intp), np.asarray(red_k, dtype=np.intp)))
        object.__setattr__(self, "_var_nf", tuple(var_nf))

    @property
    def bezout(self) -> int:
        return len(self.basis_indices)

    @property
    def row_count(self) -> int:
        return sum(len(m) for m in self.multipliers)

    @property
    def column_count(self) -> int:
        return len(self.columns)

    def basis_monomials(self) -> tuple[ExponentVector, ...]:
        return tuple(self.columns[c] for c in self.basis_indices)


def _unit(n: int, i: int) -> ExponentVector:
    return tuple(1 if k == i else 0 for k in range(n))


def _equation_sources(support: SupportSet, degrees: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    degs: np.ndarray = np.asarray([degree(alpha) for alpha in support], dtype=np.intp)
    return tuple(np.flatnonzero(degs <= d_j) for d_j in degrees)


def _expansion_targets(
    columns: SupportSet,
    multipliers: tuple[tuple[ExponentVector, ...], ...],
    support: SupportSet,
    sources: tuple[np.ndarray, ...],
) -> tuple[np.ndarray, ...]:
    out: list[np.ndarray] = []
    for mults, src in zip(multipliers, sources):
        targets: np.ndarray = np.empty((len(mults), len(src)), dtype=np.intp)
        for r, mu in enumerate(mults):
            for k, s in enumerate(src):
                idx: int | None = columns.index_of(multiply(mu, support[int(s)]))
                if idx is None:
                    raise ValueError(f"Product of multiplier {mu} and {support[int(s)]} exceeds the template degree.")
                targets[r, k] = idx
        out.append(targets)
    return tuple(out)


def _fill_expanded(
    values: np.ndarray, sources: tuple[np.ndarray, ...], targets: tuple[np.ndarray, ...], h: int
) -> np.ndarray:
    rows: int = sum(t.shape[0] for t in targets)
    M: np.ndarray = np.zeros((rows, h), dtype=np.float64)
    offset: int = 0
    for j, (src, tgt) in enumerate(zip(sources, targets)):
        count: int = tgt.shape[0]
        M[np.arange(offset, offset + count)[:, np.newaxis], tgt] = values[j, src][np.newaxis, :]
        offset += count
    return M


def build_expanded_matrix(C: CoefficientMatrix, t: SolverTemplate) -> np.ndarray:
    """
    Fill the template rows ``mu * f_j`` with the coefficients of an instance.

    Row ``(j, mu)`` holds the coefficients of ``mu * f_j`` over ``t.columns``; entries are copied, never
    combined. Coefficients of equation j above degree ``d_j`` are ignored.

    :param C: Instance over the template's dense support.
    :param t: Template.
    :return: ``row_count x column_count`` matrix.
    :raises DimensionError: If the instance does not match the template.
    """
    if C.support != t.support or C.m != t.config.m:
        raise DimensionError(
            f"Instance with {C.m} equations over {C.h} monomials does not match template {t.config.label()}."
        )
    return _fill_expanded(C.values, t._sources, t._targets, t.column_count)


def _pivot_columns(M: np.ndarray, rel_tol: float) -> list[int]:
    """
    Pivot columns of a row echelon form computed with partial pivoting, visiting columns left to right.

    :param M: Matrix (not modified).
    :param rel_tol: Pivot threshold relative to the largest absolute entry.
    :return: Indices of pivot columns.
    """
    A: np.ndarray = np.array(M, dtype=np.float64, copy=True)
    rows, cols = A.shape
    scale: float = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0:
        return []
    tol: float = rel_tol * scale
    pivots: list[int] = []
    r: int = 0
    for c in range(cols):
        if r >= rows:
            break
        p: int = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= tol:
            continue
        if p != r:
            A[[r, p], c:] = A[[p, r], c:]
        factors: np.ndarray = A[r + 1 :, c] / A[r, c]
        A[r + 1 :, c:] -= np.outer(factors, A[r, c:])
        pivots.append(c)
        r += 1
    return pivots


def _random_instance(config: ProblemConfig, support: SupportSet, rng: np.random.Generator) -> CoefficientMatrix:
    values: np.ndarray = rng.standard_normal((config.m, len(support)))
    degs: np.ndarray = np.asarray([degree(alpha) for alpha in support])
    for j, d_j in enumerate(config.degrees):
        values[j, degs > d_j] = 0.0
    return CoefficientMatrix(values, support)


def generate_template(
    config: ProblemConfig,
    seed: int,
    *,
    max_bezout: int = 64,
    max_degree_escalations: int = 3,
    logger: logging.Logger | None = None,
) -> SolverTemplate:
    """
    Build the elimination template of a dense problem from one random instance.

    The expanded matrix at the Macaulay degree is eliminated with partial pivoting in grevlex-descending
    column order; its non-pivot columns form the quotient basis. On a rank or basis failure the expansion
    degree is raised and the procedure repeated.

    :param config: Dense problem.
    :param seed: Seed of the standard-normal instance.
    :param max_bezout: Capacity cap on the Bezout number.
    :param max_degree_escalations: How often the expansion degree may be raised.
    :param logger: Logger, defaults to the package logger.
    :return: SolverTemplate.
    :raises CapacityError: If the Bezout number exceeds the cap.
    :raises TemplateGenerationError: If no valid basis was found.
    """
    log: logging.Logger = logger or get_logger()
    n: int = config.n
    bezout: int = config.bezout
    if bezout > max_bezout:
        raise CapacityError(f"Bezout number {bezout} of {config.label()} exceeds the cap of {max_bezout}.")

    support: SupportSet = enumerate_dense_support(n, config.max_degree)
    sources: tuple[np.ndarray, ...] = _equation_sources(support, config.degrees)
    instance: CoefficientMatrix = _random_instance(config, support, np.random.default_rng(seed))
    one: ExponentVector = (0,) * n

    expansion: int = config.macaulay_degree
    reason: str = ""
    for attempt in range(max_degree_escalations + 1):
        columns: SupportSet = SupportSet(tuple(monomials_up_to(n, expansion)))
        multipliers: tuple[tuple[ExponentVector, ...], ...] = tuple(
            tuple(monomials_up_to(n, expansion - d_j)) for d_j in config.degrees
        )
        targets: tuple[np.ndarray, ...] = _expansion_targets(columns, multipliers, support, sources)
        M: np.ndarray = _fill_expanded(instance.values, sources, targets, len(columns))
        pivots: set[int] = set(_pivot_columns(M, TEMPLATE_PIVOT_TOL))
        basis: list[int] = [c for c in range(len(columns)) if c not in pivots]

        if len(basis) != bezout:
            reason = f"basis has {len(basis)} monomials, expected {bezout}"
        elif columns.index_of(one) not in basis:
            reason = "monomial 1 is not in the basis"
        else:
            action_var: int | None = _select_action_var(columns, basis)
            if action_var is not None:
                template: SolverTemplate = _assemble_template(
                    config, expansion, columns, multipliers, basis, action_var, seed
                )
                log.info(
                    f"Template generated problem={config.label()} D={expansion} rows={template.row_count} "
                    f"columns={template.column_count} basis={template.bezout} "
                    f"reducible={len(template.reducible_indices)} action_var={action_var + 1}"
                )
                return template
            reason = "no action variable keeps x_a * B inside the columns"

        log.warning(f"Template rejected problem={config.label()} attempt={attempt + 1} D={expansion} reason={reason}")
        expansion += 1

    raise TemplateGenerationError(
        f"Could not build a template for {config.label()} after {max_degree_escalations} escalations: {reason}."
    )


def _select_action_var(columns: SupportSet, basis: list[int]) -> int | None:
    n: int = columns.n
    for a in reversed(range(n)):
        e_a: ExponentVector = _unit(n, a)
        if all(multiply(columns[b], e_a) in columns for b in basis):
            return a
    return None


def _assemble_template(
    config: ProblemConfig,
    expansion: int,
    columns: SupportSet,
    multipliers: tuple[tuple[ExponentVector, ...], ...],
    basis: list[int],
    action_var: int,
    seed: int,
) -> SolverTemplate:
    n: int = config.n
    basis_set: set[int] = set(basis)
    e_a: ExponentVector = _unit(n, action_var)
    reducible: set[int] = set()
    for b in basis:
        target: int = columns.index_of(multiply(columns[b], e_a))  # type: ignore[assignment]
        if target not in basis_set:
            reducible.add(target)
    var_pos: list[int] = []
    for i in range(n):
        col: int = columns.index_of(_unit(n, i))  # type: ignore[assignment]
        if col in basis_set:
            var_pos.append(basis.index(col))
        else:
            var_pos.append(-1)
            reducible.add(col)
    return SolverTemplate(
        config=config,
        expansion_degree=expansion,
        columns=columns,
        multipliers=multipliers,
        basis_indices=tuple(basis),
        reducible_indices=tuple(sorted(reducible)),
        action_var=action_var,
        one_pos=basis.index(columns.index_of((0,) * n)),  # type: ignore[arg-type]
        var_pos=tuple(var_pos),
        seed=seed,
    )


@dataclass(frozen=True, slots=True)
class _Reduction:
    normal_forms: np.ndarray
    min_pivot: float
    max_pivot: float
    tau_rank: float


def _reduce(C: CoefficientMatrix, t: SolverTemplate, tol: SolverTolerances) -> _Reduction:
    M: np.ndarray = build_expanded_matrix(C, t)
    if not np.all(np.isfinite(M)):
        raise NumericError("Instance coefficients must be finite.")

    A: np.ndarray = M[:, t._elim_cols]
    k: int = A.shape[1]
    scale: float = float(np.max(np.abs(A))) if A.size else 0.0
    tau_rank: float = tol.tau_rank_rel * scale

    P, L, U = scipy.linalg.lu(A)
    pivots: np.ndarray = np.abs(np.diag(U))
    min_pivot: float = float(np.min(pivots)) if pivots.size else 0.0
    max_pivot: float = float(np.max(pivots)) if pivots.size else 0.0
    if k and (scale == 0.0 or min_pivot < tau_rank):
        raise NearDegenerateInstanceError(f"Elimination pivot {min_pivot:.3e} below rank tolerance {tau_rank:.3e}.")

    rhs: np.ndarray = (P.T @ M[:, list(t.basis_indices)])[:k]
    Y: np.ndarray = scipy.linalg.solve_triangular(L[:k], rhs, lower=True, unit_diagonal=True)
    e: int = t._n_excess
    # row r: monomial reducible_indices[r] == normal_forms[r] @ e(B)
    normal_forms: np.ndarray = -scipy.linalg.solve_triangular(U[e:, e:], Y[e:], lower=False)
    return _Reduction(normal_forms=normal_forms, min_pivot=min_pivot, max_pivot=max_pivot, tau_rank=tau_rank)


def _action_from(t: SolverTemplate, normal_forms: np.ndarray) -> np.ndarray:
    T: np.ndarray = np.zeros((t.bezout, t.bezout), dtype=np.float64)
    unit_r, unit_c = t._unit_rows
    T[unit_r, unit_c] = 1.0
    red_r, red_k = t._reduced_rows
    T[red_r, :] = normal_forms[red_k, :]
    return T


def _action_matrix(C: CoefficientMatrix, t: SolverTemplate, tolerances: SolverTolerances | None = None) -> np.ndarray:
    """
    Action matrix of multiplication by ``x_a`` on the quotient basis.

    Row b is the unit vector of ``x_a * b`` when that product lies in B, otherwise its normal form.

    :param C: Instance.
    :param t: Template.
    :param tolerances: Numerical thresholds.
    :return: ``N x N`` matrix with ``T e(x) = x_a e(x)`` at every root.
    :raises NearDegenerateInstanceError: If an elimination pivot falls below the rank tolerance.
    """
    return _action_from(t, _reduce(C, t, tolerances or SolverTolerances()).normal_forms)


def solve_instance(
    C: CoefficientMatrix, t: SolverTemplate, tolerances: SolverTolerances | None = None
) -> SolutionSet:
    """
    Solve one instance with a frozen template.

    Columns are split into excess, reducible and basis blocks. An LU factorization with partial pivoting of
    ``[M_E | M_R]`` yields the normal form of every reducible monomial over B, from which the action matrix
    of multiplication by ``x_a`` is assembled. Its right eigenvectors, scaled so that the coordinate of
    monomial 1 equals one, carry the roots.

    :param C: Instance over the template's dense support.
    :param t: Template.
    :param tolerances: Numerical thresholds.
    :return: SolutionSet.
    :raises DimensionError: If the instance does not match the template.
    :raises NumericError: If a coefficient is not finite.
    :raises NearDegenerateInstanceError: If an elimination pivot falls below the rank tolerance.
    :raises EigenFailureError: If the eigen-decomposition fails.
    """
    tol: SolverTolerances = tolerances or SolverTolerances()
    red: _Reduction = _reduce(C, t, tol)
    T: np.ndarray = _action_from(t, red.normal_forms)

    try:
        _, vectors = scipy.linalg.eig(T)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailureError(f"Eigen-decomposition of the action matrix failed: {exc}") from exc
    if not np.all(np.isfinite(vectors)):
        raise EigenFailureError("Eigen-decomposition of the action matrix produced non-finite values.")

    try:
        condition: float = float(np.linalg.cond(vectors))
    except np.linalg.LinAlgError:
        condition = float("inf")

    scales: np.ndarray = vectors[t.one_pos, :]
    keep: np.ndarray = np.abs(scales) >= tol.tau_norm
    evaluations: np.ndarray = vectors[:, keep] / scales[keep][np.newaxis, :]

    roots: np.ndarray = np.empty((evaluations.shape[1], t.config.n), dtype=np.complex128)
    for i, (pos, nf) in enumerate(zip(t.var_pos, t._var_nf)):
        roots[:, i] = evaluations[pos, :] if pos >= 0 else red.normal_forms[nf, :] @ evaluations

    real_mask: np.ndarray = np.all(np.abs(roots.imag) <= tol.tau_im * (1.0 + np.abs(roots.real)), axis=1)
    diagnostics = SolveDiagnostics(
        min_pivot=red.min_pivot,
        max_pivot=red.max_pivot,
        tau_rank=red.tau_rank,
        eigen_condition=condition,
        discarded=int(np.count_nonzero(~keep)),
    )
    return SolutionSet(complex_roots=roots, real_roots=roots[real_mask].real.copy(), diagnostics=diagnostics)


@lru_cache(maxsize=1024)
def _cached_column_perm(P: VariablePermutation, support: SupportSet) -> ColumnPermutation:
    return induced_column_perm(P, support)


def solve_with_permutation(
    C: CoefficientMatrix,
    t: SolverTemplate,
    P: VariablePermutation,
    tolerances: SolverTolerances | None = None,
) -> SolutionSet:
    """
    Solve the P-permuted instance with the same template and map every root back.

    :param C: Instance over the template's dense support.
    :param t: Template.
    :param P: Variable permutation.
    :param tolerances: Numerical thresholds.
    :return: SolutionSet whose roots refer to the variables of ``C``.
    :raises DimensionError: If P or C does not match the template.
    """
    if P.n != t.config.n:
        raise DimensionError(f"Permutation of size {P.n} does not match n={t.config.n}.")
    if P.is_identity():
        return solve_instance(C, t, tolerances)
    permuted: CoefficientMatrix = permute_columns(C, _cached_column_perm(P, C.support))
    solved: SolutionSet = solve_instance(permuted, t, tolerances)
    image: list[int] = list(P.image)
    return SolutionSet(
        complex_roots=solved.complex_roots[:, image],
        real_roots=solved.real_roots[:, image],
        diagnostics=solved.diagnostics,
    )


def action_residual(
    C: CoefficientMatrix, t: SolverTemplate, root: np.ndarray, tolerances: SolverTolerances | None = None
) -> float:
    """
    Relative residual ``||T e(r) - r_a e(r)|| / ||e(r)||`` of the action matrix at a known root.

    :param C: Instance.
    :param t: Template.
    :param root: Known real root of the instance.
    :param tolerances: Numerical thresholds.
    :return: Relative residual.
    """
    T: np.ndarray = _action_matrix(C, t, tolerances)
    point: np.ndarray = np.asarray(root, dtype=np.float64)
    evaluation: np.ndarray = np.array(
        [float(np.prod(point ** np.asarray(alpha, dtype=np.float64))) for alpha in t.basis_monomials()]
    )
    diff: np.ndarray = T @ evaluation - point[t.action_var] * evaluation
    return float(np.linalg.norm(diff) / np.linalg.norm(evaluation))


def template_to_document(t: SolverTemplate) -> TemplateDocument:
    """
    Serializable view of a template.

    :param t: Template.
    :return: TemplateDocument.
    """
    return TemplateDocument(
        n=t.config.n,
        degrees=t.config.degrees,
        expansion_degree=t.expansion_degree,
        columns=t.columns.entries,
        multipliers=t.multipliers,
        basis_indices=t.basis_indices,
        reducible_indices=t.reducible_indices,
        action_var=t.action_var,
        one_pos=t.one_pos,
        var_pos=t.var_pos,
        seed=t.seed,
    )


def template_from_document(doc: TemplateDocument) -> SolverTemplate:
    """
    Rebuild a template from its document.

    :param doc: TemplateDocument.
    :return: SolverTemplate.
    :raises ValueError: If the document is inconsistent.
    """
    return SolverTemplate(
        config=ProblemConfig(n=doc.n, degrees=doc.degrees),
        expansion_degree=doc.expansion_degree,
        columns=SupportSet(tuple(tuple(c) for c in doc.columns)),
        multipliers=tuple(tuple(tuple(mu) for mu in mults) for mults in doc.multipliers),
        basis_indices=doc.basis_indices,
        reducible_indices=doc.reducible_indices,
        action_var=doc.action_var,
        one_pos=doc.one_pos,
        var_pos=doc.var_pos,
        seed=doc.seed,
    )
