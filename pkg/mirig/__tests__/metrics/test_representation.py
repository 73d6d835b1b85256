import math

import numpy as np
import pytest

from mirig.cdpgen import CdpDataset, TaskSpec
from mirig.config import TrainConfig
from mirig.metrics import (
    DegenerateInputError,
    RepresentationSet,
    representation_metrics,
    representation_set,
)
from mirig.objective import InvalidEmbeddingError
from mirig.pairing import simclr_strategy
from mirig.trainer import train


def _brute_force(vectors: np.ndarray, labels: np.ndarray, partners: np.ndarray):
    rows = vectors.tolist()
    n = len(rows)
    aligned = 0.0
    for i in range(n):
        aligned += sum((a - b) ** 2 for a, b in zip(rows[i], rows[partners[i]]))
    spread, same_total, same_count = 0.0, 0.0, 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            spread += math.exp(-2 * sum((a - b) ** 2 for a, b in zip(rows[i], rows[j])))
            if labels[i] == labels[j]:
                same_total += sum(a * b for a, b in zip(rows[i], rows[j]))
                same_count += 1
    return aligned / n, math.log(spread / (n * (n - 1))), same_total / same_count


def _random_set(n: int, seed: int) -> RepresentationSet:
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n, 3))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return RepresentationSet(
        vectors=vectors,
        labels=rng.integers(0, 4, size=n),
        pair_index=rng.integers(0, n, size=n),
    )


@pytest.mark.parametrize("n", [100, 1000])
def test_matches_brute_force(n: int) -> None:
    reps = _random_set(n, seed=5)
    metrics = representation_metrics(reps)
    expected = _brute_force(reps.vectors, reps.labels, reps.pair_index)
    assert metrics.alignment == pytest.approx(expected[0], abs=1e-6)
    assert metrics.uniformity == pytest.approx(expected[1], abs=1e-6)
    assert metrics.tolerance == pytest.approx(expected[2], abs=1e-6)


def test_collapsed_cluster() -> None:
    vectors = np.tile([[1.0, 0.0, 0.0]], (6, 1))
    reps = RepresentationSet(
        vectors=vectors, labels=np.zeros(6, dtype=int), pair_index=np.arange(6)[::-1]
    )
    metrics = representation_metrics(reps)
    assert metrics.alignment == 0.0
    assert metrics.uniformity == 0.0
    assert metrics.tolerance == 1.0


def test_two_antipodal_points() -> None:
    reps = RepresentationSet(
        vectors=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        labels=np.array([0, 0]),
        pair_index=np.array([0, 1]),
    )
    metrics = representation_metrics(reps)
    assert metrics.alignment == 0.0
    assert metrics.uniformity == pytest.approx(-8.0, abs=1e-12)
    assert metrics.tolerance == pytest.approx(-1.0)


def test_rejections() -> None:
    with pytest.raises(DegenerateInputError):
        representation_metrics(
            RepresentationSet(np.array([[1.0, 0.0]]), np.array([0]), np.array([0]))
        )
    with pytest.raises(InvalidEmbeddingError):
        representation_metrics(
            RepresentationSet(np.ones((3, 2)), np.zeros(3), np.arange(3))
        )
    with pytest.raises(ValueError):
        representation_metrics(RepresentationSet(np.eye(2), np.zeros(2)))
    with pytest.raises(ValueError):
        RepresentationSet(np.eye(2), np.zeros(2), np.array([0, 2]))
    with pytest.raises(DegenerateInputError):
        representation_metrics(RepresentationSet(np.eye(2), np.arange(2), np.arange(2)))


@pytest.fixture(scope="module")
def trained(small_dataset: CdpDataset):
    config = TrainConfig(
        batch_size=8, steps=20, eval_interval=10, repr_dim=8, hidden_dim=8, proj_dim=4
    )
    return train(config, small_dataset)


def test_same_class_representation_set(trained, small_dataset: CdpDataset) -> None:
    task = TaskSpec.of("color")
    reps = representation_set(trained, small_dataset, task)
    n = small_dataset.split("eval").size
    assert reps.vectors.shape == (n, 8)
    np.testing.assert_allclose(np.linalg.norm(reps.vectors, axis=1), 1.0, atol=1e-5)
    np.testing.assert_array_equal(reps.labels, reps.labels[reps.pair_index])
    assert np.count_nonzero(reps.pair_index == np.arange(n)) == 0


def test_augmented_representation_set(trained, small_dataset: CdpDataset) -> None:
    reps = representation_set(
        trained, small_dataset, TaskSpec.all(), simclr_strategy(0.5)
    )
    n = small_dataset.split("eval").size
    assert reps.vectors.shape == (2 * n, 8)
    np.testing.assert_array_equal(reps.pair_index[reps.pair_index], np.arange(2 * n))
    metrics = representation_metrics(reps)
    assert metrics.alignment >= 0
    assert metrics.uniformity <= 0
    assert -1 <= metrics.tolerance <= 1
