from __future__ import annotations

import json
from typing import Any


def parse_ranges(raw: str) -> tuple[tuple[float, float], ...]:
    """
    Parse coefficient ranges from a CLI/env value.

    Accepts a JSON array of pairs (``[[0,1],[0,10]]``) or the compact form ``"0,1;0,10"``.

    :param raw: Raw value.
    :return: Tuple of ``(lo, hi)`` pairs.
    :raises ValueError: If the value cannot be parsed.
    """
    val: str = str(raw).strip()
    if not val:
        raise ValueError("Ranges value must be non-empty.")

    if val.startswith("["):
        parsed: Any
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError as e:
            raise ValueError("Invalid JSON for ranges.") from e
        if not isinstance(parsed, list) or any(not isinstance(p, list) or len(p) != 2 for p in parsed):
            raise ValueError("Ranges JSON must be an array of [lo, hi] pairs.")
        return tuple((float(lo), float(hi)) for lo, hi in parsed)

    pairs: list[tuple[float, float]] = []
    for chunk in val.split(";"):
        part: str = chunk.strip()
        if not part:
            continue
        bounds: list[str] = [b.strip() for b in part.split(",")]
        if len(bounds) != 2:
            raise ValueError(f"Range '{part}' must have the form lo,hi.")
        try:
            pairs.append((float(bounds[0]), float(bounds[1])))
        except ValueError as e:
            raise ValueError(f"Range '{part}' contains a non-numeric bound.") from e
    if not pairs:
        raise ValueError("Ranges value must contain at least one interval.")
    return tuple(pairs)


def parse_image_sequence(raw: str) -> tuple[int, ...]:
    """
    Parse a 1-based comma-separated permutation image, e.g. ``"2,1,3"``.

    :param raw: Raw value.
    :return: Image sequence converted to 0-based indices.
    :raises ValueError: If the value is not a list of positive integers.
    """
    val: str = str(raw).strip()
    if not val:
        raise ValueError("Permutation must be non-empty.")
    try:
        image: list[int] = [int(p.strip()) for p in val.split(",")]
    except ValueError as e:
        raise ValueError(f"Permutation '{val}' must be comma-separated integers.") from e
    if any(i < 1 for i in image):
        raise ValueError(f"Permutation '{val}' must use 1-based indices.")
    return tuple(i - 1 for i in image)


def parse_problem(raw: str, presets: dict[str, tuple[int, int]]) -> tuple[int, tuple[int, ...]]:
    """
    Parse a problem designator: a preset name, ``"n,d"`` or ``"n,d1,d2,...,dn"``.

    :param raw: Raw value.
    :param presets: Known preset names mapped to ``(n, d)``.
    :return: ``(n, degrees)``.
    :raises ValueError: If the value is not understood.
    """
    val: str = str(raw).strip().lower()
    if val in presets:
        n, d = presets[val]
        return n, (d,) * n
    try:
        numbers: list[int] = [int(p.strip()) for p in val.split(",")]
    except ValueError as e:
        raise ValueError(f"Unknown problem '{raw}'. Use a preset ({', '.join(sorted(presets))}) or n,d.") from e
    if len(numbers) == 2:
        return numbers[0], (numbers[1],) * numbers[0]
    if len(numbers) >= 2 and len(numbers) == numbers[0] + 1:
        return numbers[0], tuple(numbers[1:])
    raise ValueError(f"Problem '{raw}' must be n,d or n,d1,...,dn.")
