from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from polyperm.config.settings import Settings
from polyperm.domain import bench as bench_ops
from polyperm.domain.dataset import LabeledDataset, Sample, augment_all, generate_base_dataset, split
from polyperm.domain.errors import DimensionError
from polyperm.domain.models import (
    BenchReport,
    InputTransform,
    ProblemConfig,
    RangeMode,
    RangeSpec,
    RunConfig,
    SpreadReport,
    StrategySummary,
    TimingSummary,
    TrainConfig,
    TrainHistory,
)
from polyperm.domain.neural import MLPModel, train
from polyperm.domain.perm import VariablePermutation
from polyperm.domain.poly import CoefficientMatrix, evaluate_residuals, newton_refine
from polyperm.domain.solver import (
    SolutionSet,
    SolverTemplate,
    SolverTolerances,
    generate_template,
    solve_with_permutation,
)
from polyperm.infra.csv_io import read_coefficients_csv, write_long_csv
from polyperm.infra.dataset_store import DatasetStore
from polyperm.infra.model_store import ModelStore
from polyperm.infra.template_store import TemplateStore

SPLIT_NAMES: tuple[str, str, str] = ("train", "val", "test")
DATASET_SUFFIX: str = ".pgbd"


def build_tolerances(settings: Settings) -> SolverTolerances:
    """
    Build solver tolerances from application settings.

    :param settings: Application settings.
    :return: SolverTolerances.
    """
    return SolverTolerances.from_settings(settings)


def build_train_config(settings: Settings, epochs: int | None = None, seed: int = 0) -> TrainConfig:
    """
    Build optimiser settings from application settings.

    :param settings: Application settings.
    :param epochs: Optional override of the epoch count.
    :param seed: Initialisation and shuffle seed.
    :return: TrainConfig.
    :raises ValueError: If settings are invalid.
    """
    return TrainConfig(
        batch_size=settings.batch_size,
        epochs=epochs if epochs is not None else settings.epochs,
        lr=settings.lr,
        beta1=settings.beta1,
        beta2=settings.beta2,
        eps=settings.adam_eps,
        seed=seed,
        bn_momentum=settings.bn_momentum,
        bn_eps=settings.bn_eps,
    )


def build_range_spec(settings: Settings, ranges: tuple[tuple[float, float], ...] | None = None) -> RangeSpec:
    """
    Build coefficient intervals, falling back to the configured defaults.

    :param settings: Application settings.
    :param ranges: Intervals given on the command line.
    :return: RangeSpec.
    :raises ValueError: If an interval is invalid.
    """
    return RangeSpec(ranges=ranges or settings.default_ranges, mode=RangeMode(settings.range_mode))


def dataset_path(directory: Path, name: str) -> Path:
    return directory / f"{name}{DATASET_SUFFIX}"


@dataclass(frozen=True, slots=True)
class GeneratedData:
    """
    Result of dataset generation.

    :param paths: Written train, validation and test files.
    :param base_counts: Base samples per split.
    :param sample_counts: Augmented samples per split.
    """

    paths: tuple[Path, Path, Path]
    base_counts: tuple[int, int, int]
    sample_counts: tuple[int, int, int]


@dataclass(frozen=True, slots=True)
class RootReport:
    """
    One real root of a solved instance.

    :param root: Coordinates.
    :param mean_residual: Mean absolute residual over equations.
    :param max_residual: Largest absolute residual.
    :param polished: Newton-refined coordinates, when requested.
    :param polished_residual: Largest absolute residual after refinement.
    """

    root: np.ndarray
    mean_residual: float
    max_residual: float
    polished: np.ndarray | None = None
    polished_residual: float | None = None


@dataclass(frozen=True, slots=True)
class SolveReport:
    """
    Result of a one-shot solve.

    :param permutation: Permutation used.
    :param solution: Raw solution set.
    :param roots: Per real root report.
    """

    permutation: VariablePermutation
    solution: SolutionSet
    roots: tuple[RootReport, ...]


class PipelineService:
    """
    Service running the offline and online stages: templates, datasets, training, benchmarking and solving.

    :param settings: Application settings.
    :param logger: Logger.
    """

    def __init__(self, settings: Settings, logger: logging.Logger) -> None:
        self._settings: Settings = settings
        self._logger: logging.Logger = logger
        self._templates: TemplateStore = TemplateStore(logger)
        self._datasets: DatasetStore = DatasetStore(logger)
        self._models: ModelStore = ModelStore(logger)
        self._tolerances: SolverTolerances = build_tolerances(settings)

    def build_template(self, problem: ProblemConfig, seed: int, out: Path) -> SolverTemplate:
        """
        Generate and save a template.

        :param problem: Problem.
        :param seed: Seed of the random instance.
        :param out: Destination file.
        :return: SolverTemplate.
        :raises CapacityError: If the Bezout number exceeds the cap.
        :raises TemplateGenerationError: If no valid basis was found.
        """
        t: SolverTemplate = generate_template(
            problem,
            seed,
            max_bezout=self._settings.max_bezout,
            max_degree_escalations=self._settings.max_degree_escalations,
            logger=self._logger,
        )
        self._templates.save(t, out)
        return t

    def generate_data(
        self,
        template_path: Path,
        count: int,
        ranges: tuple[tuple[float, float], ...] | None,
        seed: int,
        out_dir: Path,
        workers: int | None = None,
    ) -> GeneratedData:
        """
        Generate base samples, split them, augment each split and write three dataset files.

        :param template_path: Template file.
        :param count: Base samples.
        :param ranges: Coefficient intervals, None for the configured defaults.
        :param seed: Generation and split seed.
        :param out_dir: Output directory.
        :param workers: Worker processes, None for the configured value.
        :return: GeneratedData.
        """
        t: SolverTemplate = self._templates.load(template_path)
        spec: RangeSpec = build_range_spec(self._settings, ranges)
        base: list[Sample] = generate_base_dataset(
            count,
            t,
            spec,
            seed,
            tolerances=self._tolerances,
            max_variables=self._settings.max_variables,
            max_attempts_per_sample=self._settings.max_attempts_per_sample,
            stall_ratio=self._settings.stall_ratio,
            workers=workers or self._settings.workers,
            logger=self._logger,
        )
        fractions: tuple[float, float, float] = (
            self._settings.split_train,
            self._settings.split_val,
            self._settings.split_test,
        )
        parts: tuple[list[Sample], list[Sample], list[Sample]] = split(base, fractions, seed)
        paths: list[Path] = []
        sample_counts: list[int] = []
        for name, part in zip(SPLIT_NAMES, parts):
            data: LabeledDataset = LabeledDataset.from_samples(
                augment_all(part), t.config.n, t.config.m, len(t.support), seed
            )
            paths.append(self._datasets.write(data, dataset_path(out_dir, name)))
            sample_counts.append(len(data))
        self._logger.info(
            f"Datasets generated problem={t.config.label()} base={count} ranges={spec.label()} seed={seed} "
            f"train={sample_counts[0]} val={sample_counts[1]} test={sample_counts[2]}"
        )
        return GeneratedData(
            paths=(paths[0], paths[1], paths[2]),
            base_counts=(len(parts[0]), len(parts[1]), len(parts[2])),
            sample_counts=(sample_counts[0], sample_counts[1], sample_counts[2]),
        )

    def train_model(
        self,
        data_dir: Path,
        out: Path,
        epochs: int | None = None,
        seed: int = 0,
    ) -> tuple[MLPModel, TrainHistory]:
        """
        Train a ranker on ``train.pgbd`` (validated on ``val.pgbd`` when present) and save it.

        :param data_dir: Directory written by ``generate_data``.
        :param out: Model file.
        :param epochs: Optional override of the epoch count.
        :param seed: Initialisation and shuffle seed.
        :return: Trained model and history.
        :raises TrainingError: If the training set is empty or training diverges.
        """
        train_set: LabeledDataset = self._datasets.read(dataset_path(data_dir, SPLIT_NAMES[0]))
        val_file: Path = dataset_path(data_dir, SPLIT_NAMES[1])
        val_set: LabeledDataset | None = self._datasets.read(val_file) if val_file.exists() else None
        cfg: TrainConfig = build_train_config(self._settings, epochs, seed)
        dims: list[int] = [train_set.m * train_set.h]
        dims += [self._settings.hidden_width] * self._settings.hidden_layers
        dims.append(train_set.k)
        model: MLPModel = MLPModel.create(
            dims,
            seed=seed,
            input_transform=InputTransform(self._settings.input_transform),
            bn_momentum=cfg.bn_momentum,
            bn_eps=cfg.bn_eps,
        )
        trained, history = train(model, train_set, val_set, cfg, self._logger)
        self._models.save(trained, out)
        return trained, history

    def spread(
        self,
        template_path: Path,
        count: int,
        ranges: tuple[tuple[float, float], ...] | None,
        seed: int,
        out_csv: Path | None = None,
        workers: int | None = None,
    ) -> SpreadReport:
        """
        Score every permutation on fresh instances without a ranker.

        :param template_path: Template file.
        :param count: Instances.
        :param ranges: Coefficient intervals, None for the configured defaults.
        :param seed: Instance seed.
        :param out_csv: Optional long-format CSV destination.
        :param workers: Worker processes, None for the configured value.
        :return: SpreadReport.
        """
        t: SolverTemplate = self._templates.load(template_path)
        spec: RangeSpec = build_range_spec(self._settings, ranges)
        table: bench_ops.ScoreTable = self._collect(t, spec, count, seed, workers)
        frame = bench_ops.long_frame(table)
        if out_csv is not None:
            write_long_csv(frame, out_csv)
        report: SpreadReport = bench_ops.spread_report(table, frame, t.config.label(), spec.label())
        self._logger.info(
            f"Spread finished problem={t.config.label()} instances={report.instances} skipped={report.skipped} "
            f"identity_to_best={report.identity_to_best_median_ratio:.4g}"
        )
        return report

    def bench(
        self,
        template_path: Path,
        model_path: Path,
        count: int,
        ranges: tuple[tuple[float, float], ...] | None,
        seed: int,
        out_csv: Path | None = None,
        workers: int | None = None,
        timing: bool = True,
    ) -> BenchReport:
        """
        Compare every fixed permutation, the oracle best and the ranker prediction on fresh instances.

        :param template_path: Template file.
        :param model_path: Model file.
        :param count: Instances.
        :param ranges: Coefficient intervals, None for the configured defaults.
        :param seed: Instance seed; must differ from the model's training data seed.
        :param out_csv: Optional long-format CSV destination.
        :param workers: Worker processes, None for the configured value.
        :param timing: Whether to time the brute-force and predicted paths.
        :return: BenchReport.
        :raises ValueError: If the seed equals the training data seed.
        :raises DimensionError: If the model does not fit the template.
        """
        t: SolverTemplate = self._templates.load(template_path)
        model: MLPModel = self._models.load(model_path)
        spec: RangeSpec = build_range_spec(self._settings, ranges)
        RunConfig(
            problem=t.config,
            ranges=spec,
            count=count,
            seed=seed,
            train_seed=model.data_seed,
            out=out_csv or Path("."),
            workers=workers or self._settings.workers,
        )
        if model.input_width != t.config.m * len(t.support) or model.output_width != math.factorial(t.config.n):
            raise DimensionError(
                f"Model {model.input_width}->{model.output_width} does not fit template {t.config.label()}."
            )

        table: bench_ops.ScoreTable = self._collect(t, spec, count, seed, workers)
        predicted: np.ndarray = bench_ops.predict_indices(model, table.instances)
        frame = bench_ops.long_frame(table, predicted)
        if out_csv is not None:
            write_long_csv(frame, out_csv)
        spread: SpreadReport = bench_ops.spread_report(table, frame, t.config.label(), spec.label())
        predicted_summary: StrategySummary = next(
            (s for s in bench_ops.summarize(frame) if s.strategy == bench_ops.PREDICTED),
            StrategySummary(strategy=bench_ops.PREDICTED, count=0, failed=0, q1=math.nan, median=math.nan, q3=math.nan),
        )
        predicted_scores: np.ndarray = table.scores[np.arange(len(table)), predicted] if len(table) else np.zeros(0)
        identity: np.ndarray = table.scores[:, 0] if len(table) else np.zeros(0)

        timing_summary: TimingSummary | None = None
        if timing and len(table):
            timing_summary = bench_ops.time_paths(
                t,
                model,
                table.instances,
                warmup=self._settings.timing_warmup,
                iterations=self._settings.timing_iterations,
                tolerances=self._tolerances,
                max_variables=self._settings.max_variables,
            )

        report = BenchReport(
            spread=spread,
            predicted=predicted_summary,
            top_half_rate=bench_ops.top_half_rate(table, predicted),
            hit_rate=bench_ops.hit_rate(table, predicted),
            equivariance_rate=bench_ops.equivariance_rate(model, table),
            identity_to_predicted_median_ratio=bench_ops.median_ratio(identity, predicted_scores),
            timing=timing_summary,
        )
        self._logger.info(
            f"Bench finished problem={t.config.label()} instances={len(table)} top_half={report.top_half_rate:.3f} "
            f"hit={report.hit_rate:.3f} equivariance={report.equivariance_rate:.3f}"
        )
        return report

    def solve(
        self,
        template_path: Path,
        coeff_csv: Path,
        permutation: VariablePermutation | None = None,
        polish: bool = False,
    ) -> SolveReport:
        """
        Solve one instance read from CSV.

        :param template_path: Template file.
        :param coeff_csv: Coefficient CSV.
        :param permutation: Permutation, None for the identity.
        :param polish: Whether to add Newton-refined roots for display.
        :return: SolveReport.
        :raises FormatError: If the CSV is malformed.
        :raises DimensionError: If the CSV does not fit the template.
        """
        t: SolverTemplate = self._templates.load(template_path)
        C: CoefficientMatrix = read_coefficients_csv(coeff_csv, t.support)
        if C.m != t.config.m:
            raise DimensionError(f"CSV has {C.m} equations, template expects {t.config.m}.")
        P: VariablePermutation = permutation or VariablePermutation.identity(t.config.n)
        solution: SolutionSet = solve_with_permutation(C, t, P, self._tolerances)
        roots: list[RootReport] = []
        for root in solution.real_roots:
            res: np.ndarray = evaluate_residuals(C, root)
            polished: np.ndarray | None = None
            polished_res: float | None = None
            if polish and C.m == C.n:
                polished, polished_res = newton_refine(C, root)
            roots.append(
                RootReport(
                    root=np.array(root),
                    mean_residual=float(np.mean(res)),
                    max_residual=float(np.max(res)),
                    polished=polished,
                    polished_residual=polished_res,
                )
            )
        self._logger.info(
            f"Solved instance path={coeff_csv} permutation={P} complex={solution.complex_roots.shape[0]} "
            f"real={len(roots)}"
        )
        return SolveReport(permutation=P, solution=solution, roots=tuple(roots))

    def _collect(
        self, t: SolverTemplate, spec: RangeSpec, count: int, seed: int, workers: int | None
    ) -> bench_ops.ScoreTable:
        return bench_ops.collect_scores(
            t,
            spec,
            count,
            seed,
            tolerances=self._tolerances,
            max_variables=self._settings.max_variables,
            workers=workers or self._settings.workers,
            logger=self._logger,
        )
