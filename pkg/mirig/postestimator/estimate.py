from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel

from mirig.cdpgen import CdpDataset, class_entropy
from mirig.config.config import EstimationConfig
from mirig.constants import BOUND_TOLERANCE
from mirig.diffengine import (
    Optimizer,
    ParamSet,
    ShapeError,
    evaluate,
    forward_backward,
)
from mirig.io import progress_bar
from mirig.logger import LOGGER, log_context
from mirig.objective.loss import (
    LossValue,
    bound_bits,
    contrastive_targets,
    estimated_mi_bits,
)
from mirig.pairing import (
    Augmented,
    ClassIndex,
    NoValidPairsError,
    PairingStrategy,
    SameClass,
    pair_augment,
    pair_same_class,
    strategy_from_config,
)
from mirig.postestimator.critic import critic_graph
from mirig.trainer.checkpoint import EncoderCheckpoint, encode

# Independent random streams derived from the estimation seed
_TRAIN_STREAM = 0
_EVAL_STREAM = 1

# Held-out estimates above the training envelope by more than this many standard
# deviations indicate an overfit critic
HONESTY_STDS = 3.0


class InsufficientHeldOutError(ValueError):
    def __init__(self, message: str, *, required: int, available: int):
        super().__init__(message)
        self.required = required
        self.available = available


class TheoremPremiseError(ValueError):
    pass


class TheoremStatus(Enum):
    PINNED = "pinned"
    LOWER_BOUND_ONLY = "lower_bound_only"
    ESTIMATOR_VIOLATION = "estimator_violation"


class MiEstimate(BaseModel):
    """
    Held-out InfoNCE estimate of I(h_X; h_Y) for a frozen encoder. The theorem
    status is only defined for same-class pairings, where H(C) caps the true MI.
    """

    bits: float
    std_bits: float
    K_est: int
    bound_bits: float
    pairing: str
    theorem_status: TheoremStatus | None = None
    class_entropy_bits: float | None = None
    curve_bits: list[float]
    encoder_digest: str
    checkpoint_config_hash: str


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    margin: float


@dataclass(frozen=True)
class HonestyCheck:
    passed: bool
    envelope_bits: float
    excess_bits: float


def theorem1_status(
    estimate_bits: float,
    class_entropy_bits: float,
    epsilon: float,
    *,
    pairing: PairingStrategy | None = None,
) -> TheoremStatus:
    """
    Compare a same-class estimate with H(C). Since estimate <= I <= H(C), an
    estimate within epsilon of H(C) pins the true MI; one below leaves only the
    lower bound; one above means the estimator itself is broken.

    """
    if pairing is not None and not isinstance(pairing, SameClass):
        raise TheoremPremiseError(
            f"Class entropy bounds only same-class pairings, not {pairing.describe()}"
        )
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if abs(estimate_bits - class_entropy_bits) <= epsilon:
        return TheoremStatus.PINNED
    if estimate_bits < class_entropy_bits - epsilon:
        return TheoremStatus.LOWER_BOUND_ONLY
    return TheoremStatus.ESTIMATOR_VIOLATION


def check_bound(estimate: MiEstimate) -> BoundCheck:
    return BoundCheck(
        passed=estimate.bits <= estimate.bound_bits + BOUND_TOLERANCE,
        margin=estimate.bound_bits - estimate.bits,
    )


def honesty_check(estimate: MiEstimate) -> HonestyCheck:
    envelope = max(estimate.curve_bits) if estimate.curve_bits else 0.0
    excess = estimate.bits - envelope
    return HonestyCheck(
        passed=excess <= HONESTY_STDS * estimate.std_bits + BOUND_TOLERANCE,
        envelope_bits=envelope,
        excess_bits=excess,
    )


PairSource = Callable[[np.random.Generator], tuple[NDArray, NDArray]]


def _same_class_source(
    checkpoint: EncoderCheckpoint,
    dataset: CdpDataset,
    strategy: SameClass,
    K: int,
    eval_batches: int,
) -> tuple[PairSource, PairSource]:
    class_ids = dataset.class_ids(strategy.task)
    train_index = ClassIndex.build(class_ids, dataset.split("train"))
    required = eval_batches * K
    try:
        eval_index = ClassIndex.build(class_ids, dataset.split("eval"))
    except NoValidPairsError:
        raise InsufficientHeldOutError(
            f"The eval split has no same-class pairs; {required} are required",
            required=required,
            available=0,
        ) from None
    if eval_index.distinct_pairs < required:
        raise InsufficientHeldOutError(
            f"The eval split holds {eval_index.distinct_pairs} distinct "
            f"{strategy.describe()} pairs; {eval_batches} batches of {K} need "
            f"{required}",
            required=required,
            available=eval_index.distinct_pairs,
        )

    # Frozen encoder: every sample's representation is computed once
    reps = encode(checkpoint, dataset.images)

    def source(index: ClassIndex, split: str) -> PairSource:
        def draw(rng: np.random.Generator) -> tuple[NDArray, NDArray]:
            pairs = pair_same_class(
                dataset, strategy.task, K, rng, split=split, features=reps, index=index
            )
            return pairs.views_x, pairs.views_y

        return draw

    return source(train_index, "train"), source(eval_index, "eval")


def _augment_source(
    checkpoint: EncoderCheckpoint,
    dataset: CdpDataset,
    strategy: Augmented,
    K: int,
) -> tuple[PairSource, PairSource]:
    available = dataset.split("eval").size
    if available < K:
        raise InsufficientHeldOutError(
            f"The eval split holds {available} images; a batch of {K} augmented "
            f"pairs needs {K} distinct sources",
            required=K,
            available=available,
        )

    def source(split: str) -> PairSource:
        def draw(rng: np.random.Generator) -> tuple[NDArray, NDArray]:
            pairs = pair_augment(dataset, strategy, K, rng, split=split)
            return encode(checkpoint, pairs.views_x), encode(checkpoint, pairs.views_y)

        return draw

    return source("train"), source("eval")


def estimate_mi(
    checkpoint: EncoderCheckpoint,
    config: EstimationConfig,
    dataset: CdpDataset,
    *,
    expected_repr_dim: int | None = None,
) -> MiEstimate:
    """
    Freeze f_e, train a fresh critic f_c for `config.steps` batches of training
    pairs, and report the mean estimate over `config.eval_batches` held-out
    batches at K_Est = `config.batch_size`.

    """
    with log_context(f"estimate {checkpoint.metadata.config_hash[:8]}"):
        return _estimate_mi(checkpoint, config, dataset, expected_repr_dim)


def _estimate_mi(
    checkpoint: EncoderCheckpoint,
    config: EstimationConfig,
    dataset: CdpDataset,
    expected_repr_dim: int | None,
) -> MiEstimate:
    if expected_repr_dim is not None and checkpoint.repr_dim != expected_repr_dim:
        raise ShapeError(
            f"Checkpoint encodes to {checkpoint.repr_dim} dims, consumer expects "
            f"{expected_repr_dim}"
        )

    K = config.batch_size
    strategy = strategy_from_config(config.pairing)
    digest = checkpoint.encoder_digest()
    if isinstance(strategy, SameClass):
        train_pairs, eval_pairs = _same_class_source(
            checkpoint, dataset, strategy, K, config.eval_batches
        )
    else:
        train_pairs, eval_pairs = _augment_source(checkpoint, dataset, strategy, K)

    graph = critic_graph(
        checkpoint.repr_dim, config.hidden_dim, config.proj_dim, config.temperature
    )
    params = ParamSet.initialize(graph.params, seed=config.seed)
    optimizer = Optimizer(config.optimizer)
    targets = contrastive_targets(K)
    curve: list[float] = []

    LOGGER.info(
        f"Estimating MI with {strategy.describe()} pairs at K_Est={K} "
        f"({config.steps} critic steps)"
    )
    with progress_bar("Training critic", total=config.steps) as (progress, task):
        for step in range(config.steps):
            rng = np.random.default_rng([config.seed, _TRAIN_STREAM, step])
            hx, hy = train_pairs(rng)
            outputs, grads = forward_backward(
                graph, params, {"hx": hx, "hy": hy, **targets}
            )
            params = optimizer.step(params, grads)
            loss = LossValue.from_terms(outputs["terms"], K=K, negatives=2 * K - 2)
            curve.append(estimated_mi_bits(loss, K).bits)
            progress.advance(task)

    held_out = []
    for batch in range(config.eval_batches):
        rng = np.random.default_rng([config.seed, _EVAL_STREAM, batch])
        hx, hy = eval_pairs(rng)
        terms = evaluate(
            graph, params, {"hx": hx, "hy": hy, **targets}, dtype=np.float64
        )["terms"]
        loss = LossValue.from_terms(terms, K=K, negatives=2 * K - 2)
        held_out.append(estimated_mi_bits(loss, K).bits)

    if checkpoint.encoder_digest() != digest:
        raise RuntimeError("Encoder parameters changed during estimation")

    bits = float(np.mean(held_out))
    status, entropy = None, None
    if isinstance(strategy, SameClass):
        entropy = class_entropy(strategy.task)
        status = theorem1_status(bits, entropy, config.epsilon, pairing=strategy)

    estimate = MiEstimate(
        bits=bits,
        std_bits=float(np.std(held_out)),
        K_est=K,
        bound_bits=bound_bits(2 * K - 1),
        pairing=strategy.describe(),
        theorem_status=status,
        class_entropy_bits=entropy,
        curve_bits=curve,
        encoder_digest=digest,
        checkpoint_config_hash=checkpoint.metadata.config_hash,
    )
    LOGGER.info(
        f"Held-out estimate {estimate.bits:.4f} ± {estimate.std_bits:.4f} bits "
        f"(bound {estimate.bound_bits:.4f})"
        + (f", {status.value}" if status is not None else "")
    )
    return estimate
