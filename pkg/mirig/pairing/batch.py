from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen.attributes import TaskSpec
from mirig.cdpgen.dataset import CdpDataset
from mirig.logger import LOGGER
from mirig.pairing.strategies import Augmented, PairingStrategy, SameClass


class NoValidPairsError(ValueError):
    pass


@dataclass
class PairBatch:
    """
    K positive pairs. Views are images or representations depending on what the
    caller asked to gather; `source_x` / `source_y` index the dataset samples
    each view came from.
    """

    views_x: NDArray
    views_y: NDArray
    pair_labels: NDArray[np.uint8]
    source_x: NDArray[np.int64]
    source_y: NDArray[np.int64]
    externals: NDArray | None = None
    degenerate: bool = False
    excluded_classes: int = 0

    def __post_init__(self):
        if self.views_x.shape[0] != self.views_y.shape[0]:
            raise ValueError(
                f"Pair views disagree in count: {self.views_x.shape[0]} vs "
                f"{self.views_y.shape[0]}"
            )

    @property
    def K(self) -> int:
        return int(self.views_x.shape[0])


@dataclass(frozen=True)
class ClassIndex:
    """
    Members of each class within a pool of dataset indices, with the weights that
    make class-then-member sampling uniform over ordered pairs of distinct members.
    """

    order: NDArray[np.int64]
    starts: NDArray[np.int64]
    counts: NDArray[np.int64]
    weights: NDArray[np.float64]
    excluded: int

    @classmethod
    def build(cls, class_ids: NDArray, pool: NDArray) -> "ClassIndex":
        ids = class_ids[pool]
        _, inverse, counts = np.unique(ids, return_inverse=True, return_counts=True)
        order = pool[np.argsort(inverse, kind="stable")]
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        pairs = counts * (counts - 1)
        excluded = int(np.count_nonzero(counts < 2))
        if pairs.sum() == 0:
            raise NoValidPairsError("No class has two samples to pair")
        if excluded:
            LOGGER.warning(f"Excluded {excluded} singleton classes from pairing")
        return cls(
            order=order,
            starts=starts,
            counts=counts,
            weights=pairs / pairs.sum(),
            excluded=excluded,
        )

    @property
    def distinct_pairs(self) -> int:
        return int((self.counts * (self.counts - 1)).sum())

    def sample(
        self, K: int, rng: np.random.Generator
    ) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        chosen = rng.choice(self.counts.size, size=K, p=self.weights)
        sizes = self.counts[chosen]
        first = rng.integers(0, sizes)
        second = rng.integers(0, sizes - 1)
        second = second + (second >= first)
        base = self.starts[chosen]
        return self.order[base + first], self.order[base + second]


def pair_same_class(
    dataset: CdpDataset,
    task: TaskSpec,
    K: int,
    rng: np.random.Generator,
    *,
    split: str = "train",
    features: NDArray | None = None,
    index: ClassIndex | None = None,
) -> PairBatch:
    """
    Draw K ordered pairs of distinct samples agreeing on every attribute in
    `task`, uniformly over all such pairs. Views are gathered from `features`
    (one row per dataset sample) when given, otherwise from the images.

    """
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    if index is None:
        index = ClassIndex.build(dataset.class_ids(task), dataset.split(split))
    source_x, source_y = index.sample(K, rng)
    views = dataset.images if features is None else features
    return PairBatch(
        views_x=views[source_x],
        views_y=views[source_y],
        pair_labels=dataset.labels[source_x],
        source_x=source_x,
        source_y=source_y,
        excluded_classes=index.excluded,
    )


def pair_augment(
    dataset: CdpDataset,
    strategy: Augmented,
    K: int,
    rng: np.random.Generator,
    *,
    split: str = "train",
) -> PairBatch:
    """
    Draw K distinct sources and two independent augmentations of each. A source
    repeated within the batch would count as its own negative.
    """
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    pool = dataset.split(split)
    if pool.size < K:
        raise NoValidPairsError(
            f"The {split} split holds {pool.size} images; {K} augmented pairs need "
            f"{K} distinct sources"
        )

    sources = rng.choice(pool, size=K, replace=False)
    views_x = np.empty((K, *dataset.images.shape[1:]), dtype=np.float32)
    views_y = np.empty_like(views_x)
    for row, source in enumerate(sources):
        image = dataset.images[source]
        views_x[row] = strategy.apply(image, rng)
        views_y[row] = strategy.apply(image, rng)

    if strategy.is_identity:
        LOGGER.debug("Augmentation strengths are all zero; both views equal the source")
    return PairBatch(
        views_x=views_x,
        views_y=views_y,
        pair_labels=dataset.labels[sources],
        source_x=sources,
        source_y=sources.copy(),
        degenerate=strategy.is_identity,
    )


def make_pairs(
    dataset: CdpDataset,
    strategy: PairingStrategy,
    K: int,
    rng: np.random.Generator,
    *,
    split: str = "train",
) -> PairBatch:
    if isinstance(strategy, SameClass):
        return pair_same_class(dataset, strategy.task, K, rng, split=split)
    return pair_augment(dataset, strategy, K, rng, split=split)
