from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Final

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

PROBLEM_PRESETS: Final[dict[str, tuple[int, int]]] = {
    "3x3": (3, 3),
    "4x2": (4, 2),
    "2x4": (2, 4),
    "2x2": (2, 2),
}


class RangeMode(str, Enum):
    """
    How coefficient intervals are drawn.

    :cvar PER_COEFFICIENT: Every coefficient picks its own interval.
    :cvar PER_INSTANCE: One interval is picked per coefficient matrix.
    """

    PER_COEFFICIENT = "per_coefficient"
    PER_INSTANCE = "per_instance"


class InputTransform(str, Enum):
    """
    Transform applied to vectorized coefficients before the first ranker layer.

    :cvar RAW: Coefficients are used unchanged.
    :cvar SIGNED_LOG: ``sign(c) * log1p(|c|)``.
    """

    RAW = "raw"
    SIGNED_LOG = "signed_log"


class ProblemConfig(BaseModel):
    """
    Dense square polynomial problem.

    :param n: Variable count.
    :param degrees: Maximum total degree per equation; the equation count is ``len(degrees)``.
    :raises ValueError: If n < 1, a degree < 1 or the number of equations differs from n.
    """

    model_config = ConfigDict(frozen=True)
    n: int = Field(ge=1, le=16)
    degrees: tuple[int, ...]

    @field_validator("degrees")
    @classmethod
    def _validate_degrees(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("degrees must be non-empty.")
        if any(d < 1 for d in v):
            raise ValueError("Every equation degree must be >= 1.")
        return v

    @model_validator(mode="after")
    def _validate_square(self) -> ProblemConfig:
        if len(self.degrees) != self.n:
            raise ValueError(f"Expected {self.n} equations, got {len(self.degrees)} degrees.")
        return self

    @classmethod
    def dense(cls, n: int, d: int) -> ProblemConfig:
        """
        Build a problem with a uniform degree.

        :param n: Variable count.
        :param d: Degree of every equation.
        :return: ProblemConfig.
        """
        return cls(n=n, degrees=(d,) * n)

    @property
    def m(self) -> int:
        return len(self.degrees)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @property
    def bezout(self) -> int:
        return math.prod(self.degrees)

    @property
    def macaulay_degree(self) -> int:
        return sum(d - 1 for d in self.degrees) + 1

    def label(self) -> str:
        if len(set(self.degrees)) == 1:
            return f"{self.n}x{self.degrees[0]}"
        return f"{self.n}x" + "-".join(str(d) for d in self.degrees)


class RangeSpec(BaseModel):
    """
    Closed coefficient intervals.

    :param ranges: Non-empty list of ``(lo, hi)`` intervals with ``lo < hi``.
    :param mode: Interval selection mode.
    :raises ValueError: If an interval is empty or not finite.
    """

    model_config = ConfigDict(frozen=True)
    ranges: tuple[tuple[float, float], ...]
    mode: RangeMode = RangeMode.PER_COEFFICIENT

    @field_validator("ranges")
    @classmethod
    def _validate_ranges(cls, v: tuple[tuple[float, float], ...]) -> tuple[tuple[float, float], ...]:
        if not v:
            raise ValueError("ranges must be non-empty.")
        for lo, hi in v:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError("Range bounds must be finite.")
            if not lo < hi:
                raise ValueError(f"Range [{lo}, {hi}] must satisfy lo < hi.")
        return v

    def label(self) -> str:
        return ";".join(f"{lo:g},{hi:g}" for lo, hi in self.ranges)


class TrainConfig(BaseModel):
    """
    Ranker optimisation settings.

    :param batch_size: Mini-batch size.
    :param epochs: Number of epochs.
    :param lr: Adam learning rate.
    :param beta1: Adam first-moment decay.
    :param beta2: Adam second-moment decay.
    :param eps: Adam epsilon.
    :param seed: Seed of initialisation and shuffling.
    :param bn_momentum: Weight of the previous running statistics.
    :param bn_eps: Batch-normalization epsilon.
    :raises ValueError: On non-positive values or decays outside (0, 1).
    """

    model_config = ConfigDict(frozen=True)
    batch_size: int = Field(default=128, ge=1)
    epochs: int = Field(default=200, ge=1)
    lr: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)
    bn_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    bn_eps: float = Field(default=1e-5, gt=0.0)


class EpochRecord(BaseModel):
    """
    Per-epoch training record.

    :param epoch: 1-based epoch index.
    :param train_loss: Mean training loss over the epoch's mini-batches.
    :param val_loss: Validation loss in inference mode, None without validation data.
    """

    model_config = ConfigDict(frozen=True)
    epoch: int = Field(ge=1)
    train_loss: float
    val_loss: float | None = None


class TrainHistory(BaseModel):
    """
    Training history.

    :param records: Per-epoch records.
    :param best_epoch: Epoch whose parameters were kept.
    """

    model_config = ConfigDict(frozen=True)
    records: tuple[EpochRecord, ...] = Field(default_factory=tuple)
    best_epoch: int = Field(default=0, ge=0)


class TemplateDocument(BaseModel):
    """
    Serialized elimination template (JSON, ``schema_version`` 1).

    Exponent vectors are lists of non-negative integers; all indices are 0-based and refer to ``columns``
    except ``one_pos``/``var_pos`` which index into ``basis_indices``.

    :param schema_version: Document version.
    :param n: Variable count.
    :param degrees: Per-equation degrees.
    :param expansion_degree: Expansion degree D.
    :param columns: Exponent vectors of all monomials of degree <= D, grevlex-descending.
    :param multipliers: Per-equation multiplier exponent vectors.
    :param basis_indices: Column indices of the quotient basis B.
    :param reducible_indices: Column indices whose normal forms the online solve computes.
    :param action_var: 0-based action variable.
    :param one_pos: Position of monomial 1 within B.
    :param var_pos: Position of x_i within B, -1 when x_i is read from its normal form.
    :param seed: Seed of the random instance used to select B.
    """

    model_config = ConfigDict(frozen=True)
    schema_version: int = Field(default=1)
    n: int = Field(ge=1)
    degrees: tuple[int, ...]
    expansion_degree: int = Field(ge=1)
    columns: tuple[tuple[int, ...], ...]
    multipliers: tuple[tuple[tuple[int, ...], ...], ...]
    basis_indices: tuple[int, ...]
    reducible_indices: tuple[int, ...]
    action_var: int = Field(ge=0)
    one_pos: int = Field(ge=0)
    var_pos: tuple[int, ...]
    seed: int = Field(ge=0)

    @field_validator("schema_version")
    @classmethod
    def _validate_version(cls, v: int) -> int:
        if v != 1:
            raise ValueError(f"Unsupported template schema_version {v}.")
        return v


class StrategySummary(BaseModel):
    """
    Distribution summary for one solve strategy.

    :param strategy: Strategy name (``perm:<image>``, ``best`` or ``predicted``).
    :param count: Number of instances.
    :param failed: Instances for which the strategy returned no real root.
    :param q1: First quartile of log10 scores.
    :param median: Median of log10 scores.
    :param q3: Third quartile of log10 scores.
    """

    model_config = ConfigDict(frozen=True)
    strategy: str
    count: int = Field(ge=0)
    failed: int = Field(ge=0)
    q1: float
    median: float
    q3: float


class TimingSummary(BaseModel):
    """
    Wall-clock comparison of the two online paths.

    :param brute_force_ms: Median time of solving all n! permutations and taking the best.
    :param predicted_ms: Median time of ranker inference plus a single solve.
    :param iterations: Timed iterations per path.
    :param warmup: Untimed warmup iterations per path.
    """

    model_config = ConfigDict(frozen=True)
    brute_force_ms: float
    predicted_ms: float
    iterations: int
    warmup: int

    @property
    def speedup(self) -> float:
        return self.brute_force_ms / self.predicted_ms if self.predicted_ms > 0 else math.inf


class SpreadReport(BaseModel):
    """
    Oracle-only spread of scores across permutations.

    :param problem: Problem label.
    :param ranges: Range label.
    :param instances: Instances with at least one successful permutation.
    :param skipped: Instances discarded because every permutation failed.
    :param strategies: Per-strategy summaries (every permutation, then ``best``).
    :param identity_to_best_median_ratio: Ratio of identity and best-of medians in linear scale.
    """

    model_config = ConfigDict(frozen=True)
    problem: str
    ranges: str
    instances: int = Field(ge=0)
    skipped: int = Field(ge=0)
    strategies: tuple[StrategySummary, ...]
    identity_to_best_median_ratio: float


class BenchReport(BaseModel):
    """
    Benchmark result of the learned ranker against all fixed permutations and the oracle.

    :param spread: Oracle spread over the benchmark instances.
    :param predicted: Summary of the classifier-predicted strategy.
    :param top_half_rate: Fraction of instances whose predicted permutation ranks in the top half.
    :param hit_rate: Fraction of instances where the prediction equals the oracle best.
    :param equivariance_rate: Fraction of permuted instances whose prediction equals the transferred oracle best.
    :param identity_to_predicted_median_ratio: Ratio of identity and predicted medians in linear scale.
    :param timing: Timing comparison, None when timing was skipped.
    """

    model_config = ConfigDict(frozen=True)
    spread: SpreadReport
    predicted: StrategySummary
    top_half_rate: float = Field(ge=0.0, le=1.0)
    hit_rate: float = Field(ge=0.0, le=1.0)
    equivariance_rate: float = Field(ge=0.0, le=1.0)
    identity_to_predicted_median_ratio: float
    timing: TimingSummary | None = None


class RunConfig(BaseModel):
    """
    Resolved configuration of one CLI run.

    :param problem: Problem definition.
    :param ranges: Coefficient ranges.
    :param count: Base instances to generate or benchmark.
    :param seed: Seed of the run.
    :param train_seed: Seed of the data the model was trained on, if known.
    :param out: Output path.
    :param workers: Worker processes.
    :raises ValueError: If benchmark and training seeds coincide.
    """

    model_config = ConfigDict(frozen=True)
    problem: ProblemConfig
    ranges: RangeSpec
    count: int = Field(ge=0)
    seed: int = Field(ge=0)
    train_seed: int | None = Field(default=None, ge=0)
    out: Path
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _validate_seed_disjointness(self) -> RunConfig:
        if self.train_seed is not None and self.train_seed == self.seed:
            raise ValueError(f"Benchmark seed {self.seed} must differ from the training data seed.")
        return self
