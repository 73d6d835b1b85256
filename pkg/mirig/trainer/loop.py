from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen import CdpDataset
from mirig.config.config import TrainConfig
from mirig.diffengine import NonFiniteError, Optimizer, ParamSet, forward_backward
from mirig.io import progress_bar
from mirig.logger import LOGGER, log_context
from mirig.objective.loss import LossValue, contrastive_targets, estimated_mi_bits
from mirig.pairing import (
    Augmented,
    ClassIndex,
    PairingStrategy,
    SameClass,
    pair_augment,
    pair_same_class,
    strategy_from_config,
)
from mirig.trainer.checkpoint import CheckpointMetadata, EncoderCheckpoint
from mirig.trainer.models import Architecture, training_graph
from mirig.trainer.negatives import negative_pool

Batch = dict[str, NDArray]


class TrainingDivergedError(RuntimeError):
    def __init__(self, diagnostic: str, checkpoint: EncoderCheckpoint):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.checkpoint = checkpoint


@dataclass
class _Curve:
    steps: list[int]
    bits: list[float]
    last_loss: float | None = None


def initial_checkpoint(config: TrainConfig, image_size: int) -> EncoderCheckpoint:
    """
    The untrained encoder and head a run with `config` starts from.
    """
    arch = Architecture.from_config(config, image_size)
    graph = training_graph(arch, config.temperature, _negative_mode(config))
    params = ParamSet.initialize(graph.params, seed=config.seed)
    return _checkpoint(config, arch, params, _Curve([], []), steps=0)


def _negative_mode(config: TrainConfig):
    return "in_batch" if config.negatives is None else "external"


def _checkpoint(
    config: TrainConfig,
    arch: Architecture,
    params: ParamSet,
    curve: _Curve,
    steps: int,
) -> EncoderCheckpoint:
    return EncoderCheckpoint(
        metadata=CheckpointMetadata(
            architecture=arch,
            config_hash=config.config_hash(),
            pairing=strategy_from_config(config.pairing).describe(),
            batch_size=config.batch_size,
            temperature=config.temperature,
            steps=steps,
            seed=config.seed,
            final_loss_nats=curve.last_loss,
            curve_steps=list(curve.steps),
            curve_bits=list(curve.bits),
        ),
        params=params.copy(),
    )


def batch_builder(
    config: TrainConfig,
    dataset: CdpDataset,
    strategy: PairingStrategy,
    negatives: NDArray | None,
) -> Callable[[int], Batch]:
    """
    Step index to training inputs. Every batch draws from its own generator
    seeded by (seed, step), so batches can be built ahead in any order.

    """
    K = config.batch_size
    M = config.negatives_per_batch if negatives is not None else 0
    targets = contrastive_targets(K, M)
    index = (
        ClassIndex.build(dataset.class_ids(strategy.task), dataset.split("train"))
        if isinstance(strategy, SameClass)
        else None
    )

    def build(step: int) -> Batch:
        rng = np.random.default_rng([config.seed, step])
        if isinstance(strategy, SameClass):
            pairs = pair_same_class(dataset, strategy.task, K, rng, index=index)
        else:
            pairs = pair_augment(dataset, strategy, K, rng)
        batch = {"x": pairs.views_x, "y": pairs.views_y, **targets}
        if negatives is not None:
            batch["neg"] = negatives[rng.integers(0, len(negatives), size=M)]
        return batch

    return build


def _prefetched(build: Callable[[int], Batch], steps: int, depth: int):
    if depth == 0:
        for step in range(steps):
            yield build(step)
        return
    with ThreadPoolExecutor(max_workers=1, thread_name_prefix="batches") as pool:
        pending: deque[Future[Batch]] = deque()
        for step in range(min(depth, steps)):
            pending.append(pool.submit(build, step))
        for step in range(steps):
            batch = pending.popleft().result()
            if step + depth < steps:
                pending.append(pool.submit(build, step + depth))
            yield batch


def train(
    config: TrainConfig,
    dataset: CdpDataset,
    *,
    negatives: NDArray | None = None,
) -> EncoderCheckpoint:
    """
    Train f_e and f_p for exactly `config.steps` optimizer steps on NT-Xent.

    The in-training MI curve holds, every `eval_interval` steps and at the last
    step, the estimate in bits from the mean loss over the steps since the
    previous point. When `config.negatives` is set, `negatives` supplies the
    D⁻ image pool; without it the pool is cut from `dataset`.

    """
    with log_context(f"train {config.config_hash()[:8]}"):
        return _train(config, dataset, negatives)


def _train(
    config: TrainConfig, dataset: CdpDataset, negatives: NDArray | None
) -> EncoderCheckpoint:
    if len(dataset) == 0:
        raise ValueError("Cannot train on an empty dataset")
    if config.negatives is not None and negatives is None:
        negatives = negative_pool(config.negatives, dataset)

    arch = Architecture.from_config(config, dataset.size)
    graph = training_graph(arch, config.temperature, _negative_mode(config))
    params = ParamSet.initialize(graph.params, seed=config.seed)
    optimizer = Optimizer(config.optimizer)
    strategy = strategy_from_config(config.pairing)
    if isinstance(strategy, Augmented) and strategy.is_identity:
        LOGGER.warning(
            "Augmentation strengths are all zero: every positive pair is two copies "
            "of one image"
        )

    K = config.batch_size
    candidates_minus_one = (
        2 * K - 2 if negatives is None else config.negatives_per_batch
    )
    build = batch_builder(config, dataset, strategy, negatives)
    curve = _Curve([], [])
    window: list[NDArray] = []

    LOGGER.info(
        f"Training {arch.encoder} encoder: K={K}, tau={config.temperature}, "
        f"{config.steps} steps, pairing {strategy.describe()}"
    )
    with progress_bar("Training", total=config.steps) as (progress, task):
        batches = _prefetched(build, config.steps, config.prefetch)
        for step, batch in enumerate(batches, start=1):
            try:
                outputs, grads = forward_backward(graph, params, batch)
                params = optimizer.step(params, grads)
            except NonFiniteError as exc:
                diagnostic = (
                    f"Training diverged at step {step}: {exc} "
                    f"(lr={config.optimizer.lr}, tau={config.temperature})"
                )
                LOGGER.error(diagnostic)
                raise TrainingDivergedError(
                    diagnostic, _checkpoint(config, arch, params, curve, step - 1)
                ) from exc

            window.append(outputs["terms"])
            if step % config.eval_interval == 0 or step == config.steps:
                loss = LossValue.from_terms(
                    np.concatenate(window), K=K, negatives=candidates_minus_one
                )
                curve.steps.append(step)
                curve.bits.append(estimated_mi_bits(loss, K).bits)
                curve.last_loss = loss.nats
                LOGGER.debug(
                    f"step {step}: loss {loss.nats:.4f} nats, "
                    f"{curve.bits[-1]:.4f} bits"
                )
                window = []
            progress.advance(task)

    LOGGER.info(
        f"Finished training: loss {loss.nats:.4f} nats, in-training MI "
        f"{curve.bits[-1]:.4f} bits"
    )
    return _checkpoint(config, arch, params, curve, config.steps)
