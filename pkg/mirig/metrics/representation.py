from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist
from scipy.special import logsumexp

from mirig.cdpgen import CdpDataset, TaskSpec
from mirig.objective.loss import check_unit_rows
from mirig.pairing import Augmented, PairingStrategy, SameClass
from mirig.trainer.checkpoint import EncoderCheckpoint, encode

ALIGNMENT_EXPONENT = 2
UNIFORMITY_TEMPERATURE = 2.0


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class RepresentationSet:
    """
    Unit-norm frozen-encoder outputs, a class id per row, and optionally each
    row's positive partner.
    """

    vectors: NDArray
    labels: NDArray
    pair_index: NDArray | None = None

    def __post_init__(self):
        n = len(self.vectors)
        if len(self.labels) != n:
            raise ValueError(f"{len(self.labels)} labels for {n} vectors")
        if self.pair_index is not None:
            if len(self.pair_index) != n:
                raise ValueError(f"{len(self.pair_index)} partners for {n} vectors")
            if n and (self.pair_index.min() < 0 or self.pair_index.max() >= n):
                raise ValueError("Pair partners must index the vector set")


@dataclass(frozen=True)
class RepresentationMetrics:
    alignment: float
    uniformity: float
    tolerance: float


def alignment(vectors: NDArray, partners: NDArray) -> float:
    differences = vectors - vectors[partners]
    norms = np.linalg.norm(differences, axis=1)
    return float(np.mean(norms**ALIGNMENT_EXPONENT))


def uniformity(vectors: NDArray) -> float:
    """
    log of the mean of exp(-t |u - v|^2) over distinct pairs; the unordered pairs
    scipy enumerates give the same mean as the ordered ones.
    """
    squared = pdist(vectors, metric="sqeuclidean")
    return float(logsumexp(-UNIFORMITY_TEMPERATURE * squared) - np.log(squared.size))


def tolerance(vectors: NDArray, labels: NDArray) -> float:
    """
    Mean inner product over ordered pairs of distinct same-label rows.
    """
    total, count = 0.0, 0
    for label in np.unique(labels):
        members = vectors[labels == label]
        if len(members) < 2:
            continue
        summed = members.sum(axis=0)
        total += float(summed @ summed - np.sum(members * members))
        count += len(members) * (len(members) - 1)
    if count == 0:
        raise DegenerateInputError("No label has two members; tolerance undefined")
    return total / count


def representation_metrics(reps: RepresentationSet) -> RepresentationMetrics:
    if len(reps.vectors) < 2:
        raise DegenerateInputError("Representation metrics need at least two vectors")
    if reps.pair_index is None:
        raise ValueError("Alignment needs positive partners (pair_index)")
    vectors = np.asarray(reps.vectors, dtype=np.float64)
    check_unit_rows("vectors", vectors)
    return RepresentationMetrics(
        alignment=alignment(vectors, reps.pair_index),
        uniformity=uniformity(vectors),
        tolerance=tolerance(vectors, np.asarray(reps.labels)),
    )


def _same_class_partners(labels: NDArray, rng: np.random.Generator) -> NDArray:
    # Each member points at the next one in a shuffled cycle of its class
    partners = np.arange(len(labels))
    for label in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == label))
        partners[members] = np.roll(members, -1)
    return partners


def representation_set(
    checkpoint: EncoderCheckpoint,
    dataset: CdpDataset,
    task: TaskSpec,
    pairing: PairingStrategy | None = None,
    *,
    split: str = "eval",
    seed: int = 0,
) -> RepresentationSet:
    """
    Unit-normalized representations of one split. Same-class pairings partner
    each sample with another member of its class (singleton classes pair with
    themselves); augmentation pairings encode two views of every sample and
    partner them with each other.

    """
    indices = dataset.split(split)
    labels = dataset.class_ids(task)[indices]
    rng = np.random.default_rng(seed)
    pairing = SameClass(task) if pairing is None else pairing

    if isinstance(pairing, Augmented):
        images = dataset.images[indices]
        views_x = np.stack([pairing.apply(image, rng) for image in images])
        views_y = np.stack([pairing.apply(image, rng) for image in images])
        n = len(indices)
        return RepresentationSet(
            vectors=encode(checkpoint, np.concatenate([views_x, views_y]), unit=True),
            labels=np.concatenate([labels, labels]),
            pair_index=np.concatenate([np.arange(n, 2 * n), np.arange(n)]),
        )

    partner_labels = dataset.class_ids(pairing.task)[indices]
    return RepresentationSet(
        vectors=encode(checkpoint, dataset.images[indices], unit=True),
        labels=labels,
        pair_index=_same_class_partners(partner_labels, rng),
    )
