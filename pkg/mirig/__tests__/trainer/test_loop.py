import logging
import math

import numpy as np
import pytest

from mirig.cdpgen import Attribute, CdpDataset, Color, make_dataset
from mirig.config import PairingConfig, TrainConfig
from mirig.diffengine import NonFiniteError, evaluate
from mirig.objective import contrastive_targets
from mirig.pairing import strategy_from_config
from mirig.trainer import (
    TrainingDivergedError,
    initial_checkpoint,
    load_checkpoint,
    negative_pool,
    save_checkpoint,
    train,
    training_graph,
)
from mirig.trainer import loop as loop_module
from mirig.trainer.loop import batch_builder


def _config(**overrides) -> TrainConfig:
    values = {
        "batch_size": 8,
        "steps": 30,
        "eval_interval": 10,
        "repr_dim": 16,
        "hidden_dim": 16,
        "proj_dim": 8,
        "seed": 3,
    }
    values.update(overrides)
    return TrainConfig.model_validate(values)


# ─────────────────────────────────────────────────────────────────────────────
# Core loop
# ─────────────────────────────────────────────────────────────────────────────
def test_curve_points_and_bound(small_dataset: CdpDataset) -> None:
    config = _config()
    checkpoint = train(config, small_dataset)

    metadata = checkpoint.metadata
    assert metadata.steps == 30
    assert metadata.curve_steps == [10, 20, 30]
    assert metadata.config_hash == config.config_hash()
    assert metadata.pairing == "same_class(all)"
    assert all(bits <= math.log2(15) + 1e-9 for bits in metadata.curve_bits)
    assert metadata.final_loss_nats is not None
    assert metadata.final_loss_nats >= 0


def test_last_partial_window_is_recorded(small_dataset: CdpDataset) -> None:
    checkpoint = train(_config(steps=25), small_dataset)
    assert checkpoint.metadata.curve_steps == [10, 20, 25]


def test_training_is_deterministic(small_dataset: CdpDataset) -> None:
    first = train(_config(prefetch=0), small_dataset)
    second = train(_config(prefetch=3), small_dataset)
    assert first.params.digest() == second.params.digest()
    assert first.metadata == second.metadata


def test_training_moves_parameters(small_dataset: CdpDataset) -> None:
    config = _config(steps=5)
    start = initial_checkpoint(config, small_dataset.size)
    end = train(config, small_dataset)
    assert start.params.digest() != end.params.digest()
    assert set(start.params) == set(end.params)


def test_single_pair_batches_carry_no_information(small_dataset: CdpDataset) -> None:
    checkpoint = train(_config(batch_size=1, steps=10), small_dataset)
    assert checkpoint.metadata.curve_bits == [0.0]
    assert checkpoint.metadata.final_loss_nats == 0.0


def test_untrained_checkpoint_matches_fresh_init(
    small_dataset: CdpDataset, tmp_path
) -> None:
    config = _config()
    path = save_checkpoint(
        initial_checkpoint(config, small_dataset.size), tmp_path / "init.bin"
    )
    loaded = load_checkpoint(path)

    graph = training_graph(loaded.architecture, config.temperature)
    batch = batch_builder(
        config, small_dataset, strategy_from_config(config.pairing), None
    )(0)
    fresh = initial_checkpoint(config, small_dataset.size)

    assert (
        evaluate(graph, loaded.params, batch)["loss"]
        == evaluate(graph, fresh.params, batch)["loss"]
    )


# ─────────────────────────────────────────────────────────────────────────────
# Pairings and negatives
# ─────────────────────────────────────────────────────────────────────────────
def test_augmentation_pairing(small_dataset: CdpDataset) -> None:
    config = _config(
        steps=10, pairing=PairingConfig(kind="augment", strength=0.5)
    )
    checkpoint = train(config, small_dataset)
    assert checkpoint.metadata.pairing == "augment(crop=0.5,jitter=0.5)"


def test_identity_augmentation_warns(small_dataset: CdpDataset, caplog) -> None:
    config = _config(steps=2, pairing=PairingConfig(kind="augment", strength=0.0))
    with caplog.at_level(logging.WARNING, logger="mirig"):
        train(config, small_dataset)
    assert "Augmentation strengths are all zero" in caplog.text


def test_external_negative_training(small_dataset: CdpDataset) -> None:
    config = _config(steps=10, negatives="noise://uniform", num_negatives=6)
    checkpoint = train(config, small_dataset)
    assert checkpoint.metadata.curve_bits[0] <= math.log2(7) + 1e-9


def test_external_negatives_from_explicit_pool(small_dataset: CdpDataset) -> None:
    config = _config(steps=10, negatives="noise://uniform", num_negatives=4)
    pool = small_dataset.images[:20]
    first = train(config, small_dataset, negatives=pool)
    second = train(config, small_dataset, negatives=pool)
    default_pool = train(config, small_dataset)
    assert first.params.digest() == second.params.digest()
    assert first.params.digest() != default_pool.params.digest()


def test_external_batches_hold_requested_negatives(small_dataset: CdpDataset) -> None:
    config = _config(negatives="noise://uniform", num_negatives=5)
    pool = np.zeros((7, 3, 16, 16), dtype=np.float32)
    build = batch_builder(
        config, small_dataset, strategy_from_config(config.pairing), pool
    )
    batch = build(4)
    assert batch["neg"].shape == (5, 3, 16, 16)
    expected = contrastive_targets(8, 5)
    np.testing.assert_array_equal(batch["mask"], expected["mask"])


def test_empty_negative_subset_rejected(small_dataset: CdpDataset) -> None:
    warm = small_dataset.where(Attribute.COLOR, [Color.RED, Color.GREEN])
    config = _config(steps=1, negatives="cdp://colors/blue")
    with pytest.raises(ValueError, match="empty"):
        negative_pool(config.negatives, warm)
    with pytest.raises(ValueError, match="empty"):
        train(config, warm)


# ─────────────────────────────────────────────────────────────────────────────
# Divergence
# ─────────────────────────────────────────────────────────────────────────────
def test_divergence_returns_last_good_checkpoint(
    small_dataset: CdpDataset, monkeypatch
) -> None:
    real = loop_module.forward_backward
    calls = {"n": 0}

    def failing(graph, params, inputs, **kwargs):
        calls["n"] += 1
        if calls["n"] == 4:
            raise NonFiniteError("Non-finite value produced by node 7", node_id=7)
        return real(graph, params, inputs, **kwargs)

    monkeypatch.setattr(loop_module, "forward_backward", failing)
    with pytest.raises(TrainingDivergedError) as info:
        train(_config(steps=10, eval_interval=2), small_dataset)

    error = info.value
    assert "step 4" in error.diagnostic
    assert error.checkpoint.metadata.steps == 3
    assert error.checkpoint.metadata.curve_steps == [2]


# ─────────────────────────────────────────────────────────────────────────────
# Desk-scale saturation
# ─────────────────────────────────────────────────────────────────────────────
@pytest.mark.slow
def test_same_class_training_saturates() -> None:
    dataset = make_dataset(n=4096, seed=0, size=32, mix=0.3)
    checkpoint = train(TrainConfig(batch_size=16, steps=3000), dataset)
    assert checkpoint.final_train_bits >= 0.9 * math.log2(31)
