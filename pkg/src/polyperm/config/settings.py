from __future__ import annotations

import logging
from typing import Annotated, Any, Literal

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict

from polyperm.utils.env import parse_ranges


class _SettingsBase(BaseSettings):
    """Common settings configuration."""

    model_config = SettingsConfigDict(
        env_prefix="POLYPERM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class LoggingSettings(_SettingsBase):
    """Python logging settings."""

    log_level: str = Field(default="INFO", min_length=1, max_length=50)


class SolverSettings(_SettingsBase):
    """Elimination-template solver tolerances and capacities."""

    tau_rank_rel: float = Field(default=1e-12, gt=0.0, lt=1.0)
    tau_im: float = Field(default=1e-6, gt=0.0, lt=1.0)
    tau_norm: float = Field(default=1e-10, gt=0.0, lt=1.0)
    max_bezout: int = Field(default=64, ge=1, le=4096)
    max_degree_escalations: int = Field(default=3, ge=0, le=10)


class PermutationSettings(_SettingsBase):
    """Permutation enumeration capacity."""

    max_variables: int = Field(default=6, ge=1, le=8)


class GenerationSettings(_SettingsBase):
    """Synthetic dataset generation settings."""

    workers: int = Field(default=1, ge=1, le=256)
    max_attempts_per_sample: int = Field(default=50, ge=1, le=100_000)
    stall_ratio: float = Field(default=0.9, gt=0.0, le=1.0)
    range_mode: Literal["per_coefficient", "per_instance"] = Field(default="per_coefficient")
    default_ranges: Annotated[tuple[tuple[float, float], ...], NoDecode] = Field(default=((0.0, 1.0), (0.0, 10.0)))
    split_train: float = Field(default=0.76, ge=0.0, le=1.0)
    split_val: float = Field(default=0.12, ge=0.0, le=1.0)
    split_test: float = Field(default=0.12, ge=0.0, le=1.0)


class TrainingSettings(_SettingsBase):
    """Permutation ranker training settings."""

    batch_size: int = Field(default=128, ge=1, le=1_000_000)
    epochs: int = Field(default=200, ge=1, le=100_000)
    lr: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    bn_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    bn_eps: float = Field(default=1e-5, gt=0.0)
    hidden_width: int = Field(default=500, ge=1, le=100_000)
    hidden_layers: int = Field(default=3, ge=1, le=16)
    input_transform: Literal["raw", "signed_log"] = Field(default="raw")


class BenchSettings(_SettingsBase):
    """Benchmark harness settings."""

    timing_warmup: int = Field(default=100, ge=0)
    timing_iterations: int = Field(default=1000, ge=1)


class Settings(
    LoggingSettings,
    SolverSettings,
    PermutationSettings,
    GenerationSettings,
    TrainingSettings,
    BenchSettings,
):
    """
    Application settings.

    Values are loaded from environment variables prefixed with ``POLYPERM_``.

    :param log_level: Root Python logging level.
    :param tau_rank_rel: Relative pivot tolerance (times the largest initial pivot) for online elimination.
    :param tau_im: Relative imaginary-part tolerance for accepting a root as real.
    :param tau_norm: Minimum magnitude of the eigenvector coordinate of monomial 1.
    :param max_bezout: Largest Bezout number accepted by template generation.
    :param max_degree_escalations: How often template generation may raise the expansion degree.
    :param max_variables: Largest variable count for which all n! permutations are enumerated.
    :param workers: Worker processes for dataset generation and benchmarking.
    :param max_attempts_per_sample: Draws allowed per base sample before generation is declared stalled.
    :param stall_ratio: Failure ratio above which generation is declared stalled.
    :param range_mode: Whether the coefficient interval is drawn per coefficient or per instance.
    :param default_ranges: Coefficient intervals used when none are given on the command line.
    :param split_train: Fraction of base samples used for training.
    :param split_val: Fraction of base samples used for validation.
    :param split_test: Fraction of base samples used for testing.
    :param batch_size: Mini-batch size.
    :param epochs: Training epochs.
    :param lr: Adam learning rate.
    :param beta1: Adam first-moment decay.
    :param beta2: Adam second-moment decay.
    :param adam_eps: Adam denominator epsilon.
    :param bn_momentum: Weight of the previous running statistics in batch normalization.
    :param bn_eps: Batch-normalization variance epsilon.
    :param hidden_width: Neurons per hidden layer.
    :param hidden_layers: Number of hidden layers.
    :param input_transform: Transform applied to raw coefficients before the first layer.
    :param timing_warmup: Untimed warmup solves before timing.
    :param timing_iterations: Timed iterations per solve path.
    :raises ValueError: If environment values are invalid.
    """

    @field_validator("log_level")
    def _strip_required(cls, v: str) -> str:
        val: str = v.strip().upper()
        if not val:
            raise ValueError("Value must be non-empty.")
        if not isinstance(logging.getLevelName(val), int):
            raise ValueError(f"Unknown log level {v!r}.")
        return val

    @field_validator("default_ranges", mode="before")
    def _parse_ranges(cls, v: Any) -> Any:
        if isinstance(v, str):
            return parse_ranges(v)
        return v

    @model_validator(mode="after")
    def _validate_split(self) -> Settings:
        total: float = self.split_train + self.split_val + self.split_test
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Split fractions must sum to 1 (got {total}).")
        for lo, hi in self.default_ranges:
            if not lo < hi:
                raise ValueError("default_ranges intervals must satisfy lo < hi.")
        return self

