from __future__ import annotations

import argparse
from pathlib import Path

from polyperm.domain.models import PROBLEM_PRESETS, ProblemConfig
from polyperm.domain.perm import VariablePermutation, parse_permutation
from polyperm.utils.env import parse_problem, parse_ranges


def _problem_arg(raw: str) -> ProblemConfig:
    try:
        n, degrees = parse_problem(raw, PROBLEM_PRESETS)
        return ProblemConfig(n=n, degrees=degrees)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _ranges_arg(raw: str) -> tuple[tuple[float, float], ...]:
    try:
        ranges: tuple[tuple[float, float], ...] = parse_ranges(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    if any(not lo < hi for lo, hi in ranges):
        raise argparse.ArgumentTypeError(f"Every range in '{raw}' must satisfy lo < hi.")
    return ranges


def _permutation_arg(raw: str) -> VariablePermutation:
    try:
        return parse_permutation(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _non_negative(raw: str) -> int:
    try:
        val: int = int(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"'{raw}' is not an integer.") from e
    if val < 0:
        raise argparse.ArgumentTypeError(f"'{raw}' must be >= 0.")
    return val


def _positive(raw: str) -> int:
    val: int = _non_negative(raw)
    if val == 0:
        raise argparse.ArgumentTypeError(f"'{raw}' must be >= 1.")
    return val


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--template", type=Path, required=True, help="Template JSON written by 'template'.")
    p.add_argument("--count", type=_positive, required=True, help="Base instances to draw.")
    p.add_argument("--ranges", type=_ranges_arg, default=None, help='Coefficient intervals, e.g. "0,1;0,10".')
    p.add_argument(
        "--range-mode",
        choices=("per_coefficient", "per_instance"),
        default=None,
        help="Draw the interval per coefficient or per instance.",
    )
    p.add_argument("--seed", type=_non_negative, default=0, help="Instance stream seed.")
    p.add_argument("--workers", type=_positive, default=None, help="Worker processes.")


def build_parser() -> argparse.ArgumentParser:
    """
    Build the ``polyperm`` argument parser.

    :return: ArgumentParser with one sub-command per pipeline stage.
    """
    parser = argparse.ArgumentParser(
        prog="polyperm",
        description="Permutation-aware elimination-template solver with a learned permutation ranker.",
    )
    parser.add_argument("--log-level", default=None, help="Override POLYPERM_LOG_LEVEL.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("template", help="Generate a frozen elimination template.")
    p.add_argument(
        "--problem",
        type=_problem_arg,
        default=_problem_arg("3x3"),
        help=f"Preset ({', '.join(PROBLEM_PRESETS)}), 'n,d' or 'n,d1,...,dn'.",
    )
    p.add_argument("--seed", type=_non_negative, default=0, help="Seed of the random instance selecting the basis.")
    p.add_argument("--out", type=Path, required=True, help="Destination JSON file.")

    p = sub.add_parser("gendata", help="Generate labelled, augmented and split datasets.")
    _add_instance_args(p)
    p.add_argument("--out", type=Path, required=True, help="Output directory for train/val/test.pgbd.")

    p = sub.add_parser("train", help="Train the permutation ranker.")
    p.add_argument("--data", type=Path, required=True, help="Directory written by 'gendata'.")
    p.add_argument("--out", type=Path, required=True, help="Destination model file.")
    p.add_argument("--epochs", type=_positive, default=None, help="Override the epoch count.")
    p.add_argument("--batch-size", type=_positive, default=None, help="Override the mini-batch size.")
    p.add_argument("--lr", type=float, default=None, help="Override the Adam learning rate.")
    p.add_argument("--hidden-width", type=_positive, default=None, help="Neurons per hidden layer.")
    p.add_argument("--hidden-layers", type=_positive, default=None, help="Number of hidden layers.")
    p.add_argument("--input-transform", choices=("raw", "signed_log"), default=None, help="Input transform.")
    p.add_argument("--seed", type=_non_negative, default=0, help="Initialisation and shuffle seed.")

    p = sub.add_parser("bench", help="Benchmark fixed permutations, the oracle best and the ranker.")
    _add_instance_args(p)
    p.add_argument("--model", type=Path, required=True, help="Model file written by 'train'.")
    p.add_argument("--out", type=Path, default=None, help="Long-format CSV destination.")
    p.add_argument("--report", type=Path, default=None, help="JSON report destination.")
    p.add_argument("--no-timing", action="store_true", help="Skip the timing comparison.")

    p = sub.add_parser("spread", help="Score every permutation on fresh instances without a ranker.")
    _add_instance_args(p)
    p.add_argument("--out", type=Path, default=None, help="Long-format CSV destination.")
    p.add_argument("--report", type=Path, default=None, help="JSON report destination.")

    p = sub.add_parser("solve", help="Solve one instance read from a coefficient CSV.")
    p.add_argument("--template", type=Path, required=True, help="Template JSON written by 'template'.")
    p.add_argument("--coefficients", type=Path, required=True, help="CSV with one monomial-named column per term.")
    p.add_argument("--perm", type=_permutation_arg, default=None, help='1-based variable permutation, e.g. "2,1,3".')
    p.add_argument("--polish", action="store_true", help="Also print Newton-refined roots.")
    return parser
