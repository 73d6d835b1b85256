from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mirig.diffengine import (
    Graph,
    GraphBuilder,
    Optimizer,
    OptimizerConfig,
    ParamSet,
    SymDim,
    evaluate,
    forward_backward,
)
from mirig.logger import LOGGER
from mirig.objective.loss import (
    LossValue,
    contrastive_targets,
    estimated_mi_bits,
)

NORMALIZATION_TOLERANCE = 1e-9


class NotNormalizedError(ValueError):
    pass


def _validated_joint(joint: ArrayLike) -> NDArray[np.float64]:
    table = np.asarray(joint, dtype=np.float64)
    if table.ndim != 2:
        raise NotNormalizedError(f"Joint must be a 2-d table, got shape {table.shape}")
    if np.any(table < 0):
        raise NotNormalizedError("Joint has negative entries")
    if abs(table.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise NotNormalizedError(f"Joint sums to {table.sum():.12f}, not 1")
    return table


def exact_mi_discrete(joint: ArrayLike) -> float:
    """
    Mutual information of a finite joint table in bits, with 0 log 0 = 0.
    """
    table = _validated_joint(joint)
    px = table.sum(axis=1, keepdims=True)
    py = table.sum(axis=0, keepdims=True)
    support = table > 0
    ratio = table[support] / (px * py)[support]
    return float(np.sum(table[support] * np.log2(ratio)))


def random_joint(
    rng: np.random.Generator, n: int = 4, concentration: float = 0.5
) -> NDArray:
    """A Dirichlet-random joint over n x n outcomes, in general not symmetric."""
    return rng.dirichlet(np.full(n * n, concentration)).reshape(n, n)


def symmetric_joint(
    rng: np.random.Generator, n: int = 4, concentration: float = 0.5
) -> NDArray:
    """
    A random exchangeable joint over n x n outcomes: p(a, b) = p(b, a), the form
    every positive pairing induces on its two views.
    """
    raw = rng.dirichlet(np.full(n * n, concentration)).reshape(n, n)
    return (raw + raw.T) / 2


@dataclass(frozen=True)
class DiscreteEstimate:
    bits: float
    std_bits: float
    K: int
    exact_bits: float
    curve_bits: tuple[float, ...]


@lru_cache(maxsize=8)
def _tabular_graph(n: int) -> Graph:
    # Score of (a, b) is entry S[a, b] of a free table; one-hot rows pick it out
    K = SymDim.of("K")
    builder = GraphBuilder()
    x = builder.input("x", (K, n))
    y = builder.input("y", (K, n))
    table = builder.param("critic.table", (n, n), init="zeros")
    anchors = builder.concat(builder.affine(x, table), builder.affine(y, table))
    candidates = builder.concat(y, x)
    scores = builder.matmul_t(anchors, candidates, 1.0)
    targets = builder.input("targets", scores.shape)
    mask = builder.input("mask", scores.shape)
    terms = builder.contrastive_xent(scores, targets, mask)
    builder.output("terms", terms)
    builder.output("loss", builder.mean(terms))
    return builder.build()


@lru_cache(maxsize=8)
def _cross_view_graph(n: int, m: int) -> Graph:
    # One table per anchor side; each anchor sees only the other view's samples
    K = SymDim.of("K")
    builder = GraphBuilder()
    x = builder.input("x", (K, n))
    y = builder.input("y", (K, m))
    x_to_y = builder.param("critic.x_to_y", (n, m), init="zeros")
    y_to_x = builder.param("critic.y_to_x", (m, n), init="zeros")
    scores_x = builder.matmul_t(builder.affine(x, x_to_y), y, 1.0)
    scores_y = builder.matmul_t(builder.affine(y, y_to_x), x, 1.0)
    targets = builder.input("targets", scores_x.shape)
    mask = builder.input("mask", scores_x.shape)
    terms = builder.concat(
        builder.contrastive_xent(scores_x, targets, mask),
        builder.contrastive_xent(scores_y, targets, mask),
    )
    builder.output("terms", terms)
    builder.output("loss", builder.mean(terms))
    return builder.build()


def is_exchangeable(table: NDArray) -> bool:
    return table.shape[0] == table.shape[1] and np.allclose(table, table.T, atol=1e-12)


def _sample_onehots(
    joint: NDArray, K: int, rng: np.random.Generator, *, exchangeable: bool
) -> dict[str, NDArray[np.float32]]:
    n, m = joint.shape
    cells = rng.choice(n * m, size=K, p=joint.ravel())
    batch = {
        "x": np.eye(n, dtype=np.float32)[cells // m],
        "y": np.eye(m, dtype=np.float32)[cells % m],
    }
    if exchangeable:
        return {**batch, **contrastive_targets(K)}
    eye = np.eye(K, dtype=np.float32)
    return {**batch, "targets": eye, "mask": np.ones_like(eye)}


def estimate_discrete_mi(
    joint: ArrayLike,
    K: int = 512,
    *,
    steps: int = 400,
    eval_batches: int = 100,
    lr: float = 0.02,
    seed: int = 0,
) -> DiscreteEstimate:
    """
    Fit a tabular critic with an InfoNCE objective on pairs drawn from `joint`,
    then report the mean held-out estimate over fresh batches.

    Exchangeable joints use the in-batch NT-Xent form with one shared table and
    2K - 2 negatives per anchor. Any other joint, rectangular ones included,
    gets one table per anchor side and draws its K - 1 negatives from the other
    view only, since same-view candidates would be told apart by their marginal.
    """
    table = _validated_joint(joint)
    exchangeable = is_exchangeable(table)
    if exchangeable:
        graph = _tabular_graph(table.shape[0])
        negatives = 2 * K - 2
    else:
        graph = _cross_view_graph(*table.shape)
        negatives = K - 1

    params = ParamSet.initialize(graph.params, seed=seed)
    optimizer = Optimizer(OptimizerConfig(algorithm="adam", lr=lr))
    train_rng = np.random.default_rng([seed, 0])
    curve: list[float] = []

    for _ in range(steps):
        outputs, grads = forward_backward(
            graph,
            params,
            _sample_onehots(table, K, train_rng, exchangeable=exchangeable),
        )
        params = optimizer.step(params, grads)
        loss = LossValue.from_terms(outputs["terms"], K=K, negatives=negatives)
        curve.append(estimated_mi_bits(loss, K).bits)

    eval_rng = np.random.default_rng([seed, 1])
    held_out = []
    for _ in range(eval_batches):
        terms = evaluate(
            graph,
            params,
            _sample_onehots(table, K, eval_rng, exchangeable=exchangeable),
            dtype=np.float64,
        )["terms"]
        held_out.append(
            estimated_mi_bits(LossValue.from_terms(terms, K, negatives), K).bits
        )

    exact = exact_mi_discrete(table)
    estimate = DiscreteEstimate(
        bits=float(np.mean(held_out)),
        std_bits=float(np.std(held_out)),
        K=K,
        exact_bits=exact,
        curve_bits=tuple(curve),
    )
    LOGGER.info(
        f"Discrete oracle: estimate {estimate.bits:.4f} bits vs exact {exact:.4f} bits "
        f"(K={K}, {'shared' if exchangeable else 'per-side'} critic)"
    )
    return estimate
