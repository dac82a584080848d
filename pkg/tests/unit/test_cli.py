from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest

from polyperm.cli.commands import apply_overrides
from polyperm.cli.parser import build_parser
from polyperm.config.settings import Settings
from polyperm.domain.solver import SolverTemplate
from polyperm.infra.template_store import TemplateStore
from polyperm.main import main
from tests.conftest import make_planted, write_coefficients_csv


def _run(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_parser_defaults() -> None:
    args = build_parser().parse_args(["template", "--out", "t.json"])
    assert args.problem.n == 3 and args.problem.degrees == (3, 3, 3)
    assert args.seed == 0
    args = build_parser().parse_args(["spread", "--template", "t.json", "--count", "5", "--ranges", "0,1;0,10"])
    assert args.ranges == ((0.0, 1.0), (0.0, 10.0))
    assert args.workers is None


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["template", "--problem", "0,3", "--out", "t.json"],
        ["template", "--problem", "cube", "--out", "t.json"],
        ["spread", "--template", "t.json", "--count", "0"],
        ["spread", "--template", "t.json", "--count", "3", "--ranges", "1,0"],
        ["solve", "--template", "t.json", "--coefficients", "c.csv", "--perm", "1,1,2"],
        ["gendata", "--template", "t.json", "--count", "3"],
    ],
)
def test_usage_errors_exit_2(argv: list[str], capsys: pytest.CaptureFixture[str]) -> None:
    assert main(argv) == 2
    capsys.readouterr()


def test_help_exits_0(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["--help"]) == 0
    assert "gendata" in capsys.readouterr().out


def test_overrides_revalidate() -> None:
    args = build_parser().parse_args(["train", "--data", "d", "--out", "m", "--hidden-width", "16", "--lr", "0.01"])
    s = apply_overrides(Settings(_env_file=None), args)
    assert s.hidden_width == 16 and s.lr == 0.01
    args = build_parser().parse_args(["train", "--data", "d", "--out", "m", "--lr", "-1"])
    with pytest.raises(ValueError):
        apply_overrides(Settings(_env_file=None), args)


def test_invalid_override_exits_2(tmp_path: Path) -> None:
    code, _, err = _run(["train", "--data", str(tmp_path), "--out", str(tmp_path / "m.pgbm"), "--lr", "0"])
    assert code == 2
    assert err.startswith("error: ValidationError")


@pytest.mark.parametrize("key,value", [("POLYPERM_LOG_LEVEL", "bogus"), ("POLYPERM_WORKERS", "0")])
def test_invalid_environment_exits_2(monkeypatch: pytest.MonkeyPatch, tmp_path: Path, key: str, value: str) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(key, value)
    code, _, err = _run(["spread", "--template", str(tmp_path / "t.json"), "--count", "2"])
    assert code == 2
    assert err.startswith("error: ValidationError")


def test_missing_template_exits_1(tmp_path: Path) -> None:
    code, _, err = _run(["spread", "--template", str(tmp_path / "none.json"), "--count", "2"])
    assert code == 1
    assert "FileNotFoundError" in err


def _planted_csv(tmp_path: Path, t: SolverTemplate) -> Path:
    inst = make_planted(t, np.random.default_rng(3))
    return write_coefficients_csv(inst.coefficients, tmp_path / "c.csv")


def test_solve_from_csv(tmp_path: Path, template_2x2: SolverTemplate) -> None:
    template = TemplateStore().save(template_2x2, tmp_path / "t.json")
    csv = _planted_csv(tmp_path, template_2x2)

    code, plain, _ = _run(["solve", "--template", str(template), "--coefficients", str(csv)])
    assert code == 0
    assert "permutation 1,2" in plain
    assert "root 0:" in plain
    code, explicit, _ = _run(["solve", "--template", str(template), "--coefficients", str(csv), "--perm", "1,2"])
    assert code == 0
    assert explicit == plain
    code, swapped, _ = _run(
        ["solve", "--template", str(template), "--coefficients", str(csv), "--perm", "2,1", "--polish"]
    )
    assert code == 0
    assert "permutation 2,1" in swapped
    assert "polished" in swapped


def test_solve_rejects_bad_input(tmp_path: Path, template_2x2: SolverTemplate) -> None:
    template = TemplateStore().save(template_2x2, tmp_path / "t.json")
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,1\n1,2,3\n")
    code, _, err = _run(["solve", "--template", str(template), "--coefficients", str(bad)])
    assert code == 1
    assert "FormatError" in err
    csv = _planted_csv(tmp_path, template_2x2)
    code, _, err = _run(["solve", "--template", str(template), "--coefficients", str(csv), "--perm", "1,2,3"])
    assert code == 1
    assert "DimensionError" in err
