from __future__ import annotations

import math

import numpy as np
import pytest

from polyperm.domain import dataset as dataset_module
from polyperm.domain.dataset import (
    LabeledDataset,
    Sample,
    augment,
    augment_all,
    generate_base_dataset,
    sample_coefficients,
    split,
)
from polyperm.domain.errors import AllFailedError, DimensionError, GenerationStalledError
from polyperm.domain.models import RangeMode, RangeSpec
from polyperm.domain.oracle import RankVector, rank_permutations
from polyperm.domain.perm import composition_table
from polyperm.domain.poly import CoefficientMatrix, enumerate_dense_support
from polyperm.domain.solver import SolverTemplate

MIXED = RangeSpec(ranges=((0.0, 1.0), (0.0, 10.0)))


def test_sample_coefficients_respects_ranges() -> None:
    support = enumerate_dense_support(3, 3)
    C = sample_coefficients(support, 3, RangeSpec(ranges=((2.0, 3.0),)), np.random.default_rng(0))
    assert C.values.shape == (3, 20)
    assert np.all((C.values >= 2.0) & (C.values <= 3.0))


def test_sample_coefficients_mixes_ranges_per_entry() -> None:
    support = enumerate_dense_support(3, 3)
    C = sample_coefficients(support, 50_000, MIXED, np.random.default_rng(12))
    assert C.values.size == 1_000_000
    # half the entries come from [0,10], nine tenths of those exceed 1
    assert abs(np.mean(C.values > 1.0) - 0.45) <= 0.01
    again = sample_coefficients(support, 50_000, MIXED, np.random.default_rng(12))
    np.testing.assert_array_equal(again.values, C.values)


def test_sample_coefficients_per_instance() -> None:
    support = enumerate_dense_support(2, 2)
    spec = RangeSpec(ranges=((0.0, 1.0), (100.0, 101.0)), mode=RangeMode.PER_INSTANCE)
    rng = np.random.default_rng(6)
    for _ in range(10):
        values = sample_coefficients(support, 2, spec, rng).values
        assert np.all(values <= 1.0) or np.all(values >= 100.0)


def test_sample_coefficients_mixed_degrees() -> None:
    support = enumerate_dense_support(2, 3)
    C = sample_coefficients(support, 2, MIXED, np.random.default_rng(1), degrees=(3, 1))
    high = [i for i, alpha in enumerate(support) if sum(alpha) > 1]
    assert np.all(C.values[1, high] == 0.0)
    assert np.all(C.values[0] != 0.0)


def test_generation_is_deterministic_and_labeled(template_2x2: SolverTemplate) -> None:
    first = generate_base_dataset(6, template_2x2, MIXED, seed=3)
    second = generate_base_dataset(6, template_2x2, MIXED, seed=3)
    assert len(first) == 6
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.coefficients.values, b.coefficients.values)
        assert a.labels == b.labels
    for s in first:
        rank, _ = rank_permutations(s.coefficients, template_2x2)
        assert s.labels == rank
        assert s.scores is not None


def test_generation_empty_and_invalid(template_2x2: SolverTemplate) -> None:
    assert generate_base_dataset(0, template_2x2, MIXED, seed=0) == []
    with pytest.raises(ValueError):
        generate_base_dataset(-1, template_2x2, MIXED, seed=0)


def test_generation_stalls_when_every_draw_fails(
    template_1x1: SolverTemplate, monkeypatch: pytest.MonkeyPatch
) -> None:
    def always_fail(*_args: object, **_kwargs: object) -> None:
        raise AllFailedError("no real root")

    monkeypatch.setattr(dataset_module, "rank_permutations", always_fail)
    with pytest.raises(GenerationStalledError):
        generate_base_dataset(2, template_1x1, MIXED, seed=0, max_attempts_per_sample=2)


def test_augment_variant_zero_is_original(template_3x3: SolverTemplate) -> None:
    (base,) = generate_base_dataset(1, template_3x3, MIXED, seed=9)
    variants = augment(base)
    assert len(variants) == 6
    np.testing.assert_array_equal(variants[0].coefficients.values, base.coefficients.values)
    assert variants[0].labels == base.labels


def test_augmented_labels_match_brute_force(template_3x3: SolverTemplate) -> None:
    (base,) = generate_base_dataset(1, template_3x3, MIXED, seed=21)
    for variant in augment(base):
        rank, scores = rank_permutations(variant.coefficients, template_3x3)
        assert variant.labels == rank
        np.testing.assert_array_equal(variant.scores, [s.score for s in scores])


def test_augment_without_scores_uses_label_order(template_2x2: SolverTemplate) -> None:
    (base,) = generate_base_dataset(1, template_2x2, MIXED, seed=4)
    stripped = Sample(base.coefficients, base.labels)
    table = composition_table(2)
    for i, variant in enumerate(augment(stripped)):
        np.testing.assert_array_equal(variant.labels.values, base.labels.values[table[:, i]])
        assert variant.scores is None


def test_augment_rejects_wrong_label_width() -> None:
    support = enumerate_dense_support(3, 1)
    bad = Sample(CoefficientMatrix(np.ones((3, 4)), support), RankVector(np.array([1.0, 0.0])))
    with pytest.raises(DimensionError):
        augment(bad)


def test_split_sizes_and_disjointness(template_2x2: SolverTemplate) -> None:
    samples = [
        Sample(CoefficientMatrix(np.full((2, 6), float(i)), template_2x2.support), RankVector(np.array([1.0, 0.0])))
        for i in range(100)
    ]
    train, val, test = split(samples, (0.76, 0.12, 0.12), seed=1)
    assert (len(train), len(val), len(test)) == (76, 12, 12)
    ids = [int(s.coefficients.values[0, 0]) for s in train + val + test]
    assert sorted(ids) == list(range(100))
    again = split(samples, (0.76, 0.12, 0.12), seed=1)
    assert [s.coefficients.values[0, 0] for s in again[0]] == [s.coefficients.values[0, 0] for s in train]
    assert len(augment_all(train)) == 76 * 2


def test_split_rejects_bad_fractions() -> None:
    with pytest.raises(ValueError):
        split([], (0.5, 0.5, 0.5))


def test_labeled_dataset_shapes(template_2x2: SolverTemplate) -> None:
    samples = generate_base_dataset(3, template_2x2, MIXED, seed=2)
    data = LabeledDataset.from_samples(samples, 2, 2, len(template_2x2.support), seed=2)
    assert len(data) == 3 and data.k == math.factorial(2)
    assert data.inputs().shape == (3, 2 * 6)
    np.testing.assert_array_equal(data.inputs()[0], samples[0].coefficients.vec())
    back = data.samples(template_2x2.support)
    assert back[1].labels == samples[1].labels
    assert len(LabeledDataset.from_samples([], 2, 2, 6)) == 0
    with pytest.raises(DimensionError):
        LabeledDataset(n=3, coefficients=np.zeros((1, 2, 6)), labels=np.zeros((1, 2)))
