from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Callable, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel

from polyperm.config.settings import Settings
from polyperm.domain.models import BenchReport, SpreadReport, StrategySummary, TrainHistory
from polyperm.domain.perm import format_permutation
from polyperm.domain.services import GeneratedData, PipelineService, SolveReport

Handler = Callable[[argparse.Namespace], int]

_OVERRIDES: dict[str, str] = {
    "log_level": "log_level",
    "workers": "workers",
    "range_mode": "range_mode",
    "batch_size": "batch_size",
    "lr": "lr",
    "hidden_width": "hidden_width",
    "hidden_layers": "hidden_layers",
    "input_transform": "input_transform",
}


def apply_overrides(settings: Settings, args: argparse.Namespace) -> Settings:
    """
    Return settings with every explicitly given CLI flag applied.

    :param settings: Settings read from the environment.
    :param args: Parsed arguments.
    :return: Settings, re-validated.
    :raises ValueError: If an override is invalid.
    """
    update: dict[str, Any] = {
        field: getattr(args, flag) for flag, field in _OVERRIDES.items() if getattr(args, flag, None) is not None
    }
    if not update:
        return settings
    return Settings(**{**settings.model_dump(), **update})


def _format_float(v: float) -> str:
    return f"{v:.6g}"


def _write_report(report: BaseModel, path: Path | None) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")


def _summary_table(summaries: tuple[StrategySummary, ...]) -> str:
    frame = pd.DataFrame(
        [(s.strategy, s.count, s.failed, s.q1, s.median, s.q3) for s in summaries],
        columns=["strategy", "count", "failed", "q1", "median", "q3"],
    )
    return frame.to_string(index=False, float_format=_format_float)


def _history_table(history: TrainHistory) -> str:
    frame = pd.DataFrame(
        [(r.epoch, r.train_loss, r.val_loss) for r in history.records],
        columns=["epoch", "train_loss", "val_loss"],
    )
    return frame.to_string(index=False, float_format=_format_float, na_rep="-")


def _print_spread(report: SpreadReport, out: TextIO) -> None:
    print(f"problem {report.problem} ranges {report.ranges}", file=out)
    print(f"instances {report.instances} skipped {report.skipped}", file=out)
    print(_summary_table(report.strategies), file=out)
    print(f"identity/best median ratio {_format_float(report.identity_to_best_median_ratio)}", file=out)


def _print_roots(report: SolveReport, out: TextIO) -> None:
    diag = report.solution.diagnostics
    print(
        f"permutation {format_permutation(report.permutation)} complex roots {report.solution.complex_roots.shape[0]} "
        f"real roots {len(report.roots)} discarded {diag.discarded}",
        file=out,
    )
    with np.printoptions(precision=16, floatmode="maxprec"):
        for i, r in enumerate(report.roots):
            print(
                f"root {i}: {r.root} mean_residual {r.mean_residual:.3e} max_residual {r.max_residual:.3e}",
                file=out,
            )
            if r.polished is not None:
                print(f"  polished: {r.polished} max_residual {r.polished_residual:.3e}", file=out)


def build_handlers(service: PipelineService, logger: logging.Logger, out: TextIO) -> dict[str, Handler]:
    """
    Build one handler per sub-command.

    Handlers print their result to ``out`` and return the process exit code.

    :param service: Pipeline service.
    :param logger: Logger.
    :param out: Stream receiving the command output.
    :return: Mapping of command name to handler.
    """

    def template(args: argparse.Namespace) -> int:
        t = service.build_template(args.problem, args.seed, args.out)
        print(
            f"template {t.config.label()} D={t.expansion_degree} rows={t.row_count} columns={t.column_count} "
            f"basis={t.bezout} action_var={t.action_var + 1} -> {args.out}",
            file=out,
        )
        return 0

    def gendata(args: argparse.Namespace) -> int:
        result: GeneratedData = service.generate_data(args.template, args.count, args.ranges, args.seed, args.out)
        for path, base, samples in zip(result.paths, result.base_counts, result.sample_counts):
            print(f"{path} base={base} samples={samples}", file=out)
        return 0

    def train(args: argparse.Namespace) -> int:
        model, history = service.train_model(args.data, args.out, epochs=args.epochs, seed=args.seed)
        print(_history_table(history), file=out)
        print(f"best epoch {history.best_epoch} dims {list(model.dims)} -> {args.out}", file=out)
        return 0

    def bench(args: argparse.Namespace) -> int:
        report: BenchReport = service.bench(
            args.template,
            args.model,
            args.count,
            args.ranges,
            args.seed,
            out_csv=args.out,
            timing=not args.no_timing,
        )
        _print_spread(report.spread, out)
        print(_summary_table((report.predicted,)), file=out)
        print(
            f"top-half rate {report.top_half_rate:.3f} hit rate {report.hit_rate:.3f} "
            f"equivariance rate {report.equivariance_rate:.3f} "
            f"identity/predicted median ratio {_format_float(report.identity_to_predicted_median_ratio)}",
            file=out,
        )
        if report.timing is not None:
            print(
                f"timing brute_force {report.timing.brute_force_ms:.4f} ms predicted {report.timing.predicted_ms:.4f} "
                f"ms speedup {report.timing.speedup:.2f}",
                file=out,
            )
        _write_report(report, args.report)
        return 0

    def spread(args: argparse.Namespace) -> int:
        report: SpreadReport = service.spread(args.template, args.count, args.ranges, args.seed, out_csv=args.out)
        _print_spread(report, out)
        _write_report(report, args.report)
        return 0

    def solve(args: argparse.Namespace) -> int:
        report: SolveReport = service.solve(args.template, args.coefficients, args.perm, polish=args.polish)
        _print_roots(report, out)
        if not report.roots:
            logger.warning(f"No real root found path={args.coefficients}")
        return 0

    return {
        "template": template,
        "gendata": gendata,
        "train": train,
        "bench": bench,
        "spread": spread,
        "solve": solve,
    }
