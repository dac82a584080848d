from __future__ import annotations

import pytest
from pydantic import ValidationError

from polyperm.config.settings import Settings
from polyperm.domain.models import PROBLEM_PRESETS
from polyperm.utils.env import parse_image_sequence, parse_problem, parse_ranges


def test_defaults() -> None:
    s = Settings(_env_file=None)
    assert s.default_ranges == ((0.0, 1.0), (0.0, 10.0))
    assert (s.batch_size, s.epochs, s.lr, s.hidden_width, s.hidden_layers) == (128, 200, 1e-3, 500, 3)
    assert (s.split_train, s.split_val, s.split_test) == (0.76, 0.12, 0.12)


def test_environment_overrides(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("POLYPERM_LOG_LEVEL", " debug ")
    monkeypatch.setenv("POLYPERM_DEFAULT_RANGES", "0,1;-5,5")
    monkeypatch.setenv("POLYPERM_WORKERS", "3")
    s = Settings(_env_file=None)
    assert s.log_level == "DEBUG"
    assert s.default_ranges == ((0.0, 1.0), (-5.0, 5.0))
    assert s.workers == 3


def test_ranges_accept_json(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("POLYPERM_DEFAULT_RANGES", "[[0, 2], [1, 3]]")
    assert Settings(_env_file=None).default_ranges == ((0.0, 2.0), (1.0, 3.0))


@pytest.mark.parametrize(
    "key,value",
    [
        ("POLYPERM_SPLIT_TRAIN", "0.9"),
        ("POLYPERM_DEFAULT_RANGES", "2,1"),
        ("POLYPERM_LOG_LEVEL", "loud"),
        ("POLYPERM_RANGE_MODE", "sometimes"),
        ("POLYPERM_MAX_VARIABLES", "9"),
    ],
)
def test_invalid_environment(monkeypatch: pytest.MonkeyPatch, key: str, value: str) -> None:
    monkeypatch.setenv(key, value)
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_parse_ranges() -> None:
    assert parse_ranges("0,1;0,10") == ((0.0, 1.0), (0.0, 10.0))
    assert parse_ranges(" -1, 1 ; ") == ((-1.0, 1.0),)
    for raw in ("", "1", "a,b", ";", "[[1]]", "[1,"):
        with pytest.raises(ValueError):
            parse_ranges(raw)


def test_parse_problem() -> None:
    assert parse_problem("3x3", PROBLEM_PRESETS) == (3, (3, 3, 3))
    assert parse_problem("4x2", PROBLEM_PRESETS) == (4, (2, 2, 2, 2))
    assert parse_problem("2,3", PROBLEM_PRESETS) == (2, (3, 3))
    assert parse_problem("2,3,1", PROBLEM_PRESETS) == (2, (3, 1))
    for raw in ("cube", "2,3,1,1", "7"):
        with pytest.raises(ValueError):
            parse_problem(raw, PROBLEM_PRESETS)


def test_parse_image_sequence() -> None:
    assert parse_image_sequence("2,1,3") == (1, 0, 2)
    for raw in ("", "0,1", "a,b"):
        with pytest.raises(ValueError):
            parse_image_sequence(raw)
