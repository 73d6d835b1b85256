from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mirig.constants import BOUND_TOLERANCE
from mirig.diffengine import Graph, GraphBuilder, ParamSet, Ref, SymDim, evaluate

NORM_TOLERANCE = 1e-4


class InvalidEmbeddingError(ValueError):
    pass


class ProvenanceError(ValueError):
    pass


class BoundViolationError(AssertionError):
    pass


@dataclass(frozen=True)
class LossValue:
    """
    Mean contrastive loss in nats over 2K anchor terms: rows 0..K-1 are
    l(x_k, y_k), rows K..2K-1 are l(y_k, x_k). `negatives` is the number of
    negatives in each anchor's denominator (2K - 2 in-batch, M external).
    """

    nats: float
    per_pair_terms: NDArray[np.float64]
    K: int
    negatives: int

    @classmethod
    def from_terms(cls, terms: ArrayLike, K: int, negatives: int) -> "LossValue":
        terms = np.asarray(terms, dtype=np.float64)
        return cls(
            nats=float(terms.mean()), per_pair_terms=terms, K=K, negatives=negatives
        )


@dataclass(frozen=True)
class MiValueBits:
    bits: float
    K_used: int
    bound_bits: float


def bound_bits(candidates: int) -> float:
    """log2 of the denominator size, the ceiling of any InfoNCE estimate."""
    return float(np.log2(candidates))


def check_temperature(temperature: float) -> None:
    if not temperature > 0:
        raise ValueError(f"Temperature must be positive, got {temperature}")


def check_unit_rows(name: str, embeddings: NDArray) -> None:
    if embeddings.ndim != 2:
        raise InvalidEmbeddingError(f"{name} must be a (K, d) matrix")
    norms = np.linalg.norm(embeddings.astype(np.float64), axis=1)
    if norms.size and np.max(np.abs(norms - 1)) > NORM_TOLERANCE:
        raise InvalidEmbeddingError(
            f"{name} rows must be l2-normalized; found norms in "
            f"[{norms.min():.6f}, {norms.max():.6f}]"
        )


# ─────────────────────────────────────────────────────────────────────────────
# Graph fragments shared by training, estimation and the standalone losses
# ─────────────────────────────────────────────────────────────────────────────


def add_contrastive_terms(
    builder: GraphBuilder,
    zx: Ref,
    zy: Ref,
    temperature: float,
    negatives: Ref | None = None,
) -> Ref:
    """
    Append the per-anchor NT-Xent terms for anchors [zx; zy] against candidates
    [zy; zx] (plus external negatives when given). Declares the `targets` and
    `mask` graph inputs that `contrastive_targets` fills.
    """
    check_temperature(temperature)
    anchors = builder.concat(zx, zy)
    pool = (zy, zx) if negatives is None else (zy, zx, negatives)
    scores = builder.matmul_t(anchors, builder.concat(*pool), 1.0 / temperature)
    targets = builder.input("targets", scores.shape)
    mask = builder.input("mask", scores.shape)
    return builder.contrastive_xent(scores, targets, mask)


def contrastive_targets(K: int, M: int = 0) -> dict[str, NDArray[np.float32]]:
    """
    Target and mask tables for `add_contrastive_terms`. In-batch (M=0) each row
    keeps every candidate but itself; with M external negatives each row keeps
    only its positive and the external columns.
    """
    rows = np.arange(2 * K)
    targets = np.zeros((2 * K, 2 * K + M), dtype=np.float32)
    targets[rows, rows] = 1
    if M == 0:
        mask = np.ones_like(targets)
        mask[rows, (rows + K) % (2 * K)] = 0
    else:
        mask = np.zeros_like(targets)
        mask[rows, rows] = 1
        mask[:, 2 * K :] = 1
    return {"targets": targets, "mask": mask}


@lru_cache(maxsize=32)
def _loss_graph(dim: int, temperature: float, external: bool) -> Graph:
    K = SymDim.of("K")
    builder = GraphBuilder()
    zx = builder.input("zx", (K, dim))
    zy = builder.input("zy", (K, dim))
    negatives = builder.input("neg", (SymDim.of("M"), dim)) if external else None
    terms = add_contrastive_terms(builder, zx, zy, temperature, negatives)
    builder.output("terms", terms)
    builder.output("loss", builder.mean(terms))
    return builder.build()


def _check_pair(emb_x: NDArray, emb_y: NDArray) -> int:
    check_unit_rows("emb_x", emb_x)
    check_unit_rows("emb_y", emb_y)
    if emb_x.shape != emb_y.shape:
        raise InvalidEmbeddingError(
            f"emb_x {emb_x.shape} and emb_y {emb_y.shape} must match"
        )
    if emb_x.shape[0] < 1:
        raise InvalidEmbeddingError("At least one pair is required")
    return emb_x.shape[0]


def nt_xent(emb_x: ArrayLike, emb_y: ArrayLike, temperature: float) -> LossValue:
    """
    NT-Xent over K pairs of unit vectors: each anchor's denominator holds its
    positive and the 2K - 2 other in-batch embeddings.
    """
    check_temperature(temperature)
    emb_x, emb_y = np.asarray(emb_x, np.float64), np.asarray(emb_y, np.float64)
    K = _check_pair(emb_x, emb_y)
    graph = _loss_graph(emb_x.shape[1], float(temperature), False)
    terms = evaluate(
        graph,
        ParamSet(),
        {"zx": emb_x, "zy": emb_y, **contrastive_targets(K)},
        dtype=np.float64,
    )["terms"]
    return LossValue.from_terms(terms, K=K, negatives=2 * K - 2)


def nt_xent_external(
    emb_x: ArrayLike,
    emb_y: ArrayLike,
    emb_neg: ArrayLike,
    temperature: float,
) -> LossValue:
    """
    NT-Xent whose negatives all come from a separate dataset: each anchor's
    denominator holds its positive and the M external embeddings only.
    """
    check_temperature(temperature)
    emb_x, emb_y = np.asarray(emb_x, np.float64), np.asarray(emb_y, np.float64)
    emb_neg = np.asarray(emb_neg, np.float64)
    K = _check_pair(emb_x, emb_y)
    if emb_neg.ndim != 2 or emb_neg.shape[0] == 0:
        raise ValueError("External negatives are empty; use nt_xent instead")
    check_unit_rows("emb_neg", emb_neg)
    M = emb_neg.shape[0]
    graph = _loss_graph(emb_x.shape[1], float(temperature), True)
    terms = evaluate(
        graph,
        ParamSet(),
        {"zx": emb_x, "zy": emb_y, "neg": emb_neg, **contrastive_targets(K, M)},
        dtype=np.float64,
    )["terms"]
    return LossValue.from_terms(terms, K=K, negatives=M)


# ─────────────────────────────────────────────────────────────────────────────
# MI conversion
# ─────────────────────────────────────────────────────────────────────────────


def mi_bits_from_nats(nats: float, candidates: int) -> float:
    return float((np.log(candidates) - nats) / np.log(2))


def estimated_mi_bits(loss: LossValue, K: int) -> MiValueBits:
    """
    (ln(2K - 1) - L) / ln 2 for in-batch losses; externally sampled losses use
    their own denominator size M + 1 in place of 2K - 1.
    """
    if K != loss.K:
        raise ProvenanceError(f"Loss was computed at K={loss.K}, not K={K}")
    if loss.nats < -BOUND_TOLERANCE:
        raise ValueError(f"Loss must be non-negative, got {loss.nats}")
    candidates = loss.negatives + 1
    value = MiValueBits(
        bits=mi_bits_from_nats(loss.nats, candidates),
        K_used=K,
        bound_bits=bound_bits(candidates),
    )
    assert_bound(value)
    return value


def assert_bound(value: MiValueBits) -> None:
    if value.bits > value.bound_bits + BOUND_TOLERANCE:
        raise BoundViolationError(
            f"Estimate {value.bits:.9f} bits exceeds log2 bound "
            f"{value.bound_bits:.9f} at K={value.K_used}"
        )
