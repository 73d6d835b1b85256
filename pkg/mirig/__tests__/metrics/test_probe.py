import numpy as np
import pytest

from mirig.cdpgen import CdpDataset, TaskSpec
from mirig.config import TrainConfig
from mirig.metrics import linear_probe, metric_report, probe_accuracy
from mirig.trainer import train


def _split(small_dataset: CdpDataset, task: TaskSpec):
    labels = small_dataset.class_ids(task)
    return labels[small_dataset.split("train")], labels[small_dataset.split("eval")]


def test_one_hot_features_are_separable(small_dataset: CdpDataset) -> None:
    train_y, eval_y = _split(small_dataset, TaskSpec.of("digit"))
    eye = np.eye(4)
    result = probe_accuracy(eye[train_y], train_y, eye[eval_y], eval_y)
    assert result.accuracy == 1.0
    assert not result.degenerate


def test_constant_features_predict_majority(small_dataset: CdpDataset) -> None:
    train_y, eval_y = _split(small_dataset, TaskSpec.of("color"))
    classes, counts = np.unique(train_y, return_counts=True)
    majority = classes[np.argmax(counts)]

    result = probe_accuracy(
        np.ones((len(train_y), 5)), train_y, np.ones((len(eval_y), 5)), eval_y
    )

    assert result.degenerate
    assert result.accuracy == pytest.approx(np.mean(eval_y == majority))
    assert 0.1 < result.accuracy < 0.4


def test_unseen_eval_class_rejected() -> None:
    with pytest.raises(ValueError):
        probe_accuracy(np.eye(2), np.array([0, 1]), np.eye(2), np.array([0, 2]))


def test_probe_is_deterministic(small_dataset: CdpDataset) -> None:
    rng = np.random.default_rng(0)
    train_y, eval_y = _split(small_dataset, TaskSpec.of("position"))
    train_x = rng.standard_normal((len(train_y), 6)) + train_y[:, None]
    eval_x = rng.standard_normal((len(eval_y), 6)) + eval_y[:, None]
    first = probe_accuracy(train_x, train_y, eval_x, eval_y)
    second = probe_accuracy(train_x, train_y, eval_x, eval_y)
    assert first == second
    assert first.n_train == len(train_y)


def test_checkpoint_probe_and_report(small_dataset: CdpDataset) -> None:
    checkpoint = train(
        TrainConfig(
            batch_size=8, steps=10, repr_dim=8, hidden_dim=8, proj_dim=4
        ),
        small_dataset,
    )
    task = TaskSpec.of("color")
    result = linear_probe(checkpoint, small_dataset, task)
    assert 0.0 <= result.accuracy <= 1.0
    assert result.n_eval == small_dataset.split("eval").size

    report = metric_report(checkpoint, small_dataset, task)
    assert report.task == "color"
    assert report.pairing == "same_class(color)"
    assert report.accuracy == result.accuracy
