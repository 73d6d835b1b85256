from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen.attributes import (
    ATTRIBUTE_ORDER,
    ATTRIBUTE_VALUES,
    Attribute,
    CdpAttributes,
    TaskSpec,
    class_ids,
    sample_attributes,
)
from mirig.cdpgen.render import check_size, render, value_noise
from mirig.constants import EVAL_FRACTION
from mirig.io import progress_bar
from mirig.logger import LOGGER

# Independent random streams derived from the dataset seed
_BACKGROUND_STREAM = 1
_SPLIT_STREAM = 2


def background_seed(seed: int, index: int) -> int:
    state = np.random.SeedSequence([seed, index, _BACKGROUND_STREAM]).generate_state(1)
    return int(state[0])


def split_indices(n: int, seed: int) -> tuple[NDArray, NDArray]:
    """
    Deterministic 90/10 train/eval split from a seeded permutation.

    """
    order = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(n)
    n_eval = int(n * EVAL_FRACTION)
    return np.sort(order[n_eval:]), np.sort(order[:n_eval])


@dataclass
class CdpDataset:
    """
    Images of shape (n, 3, size, size) together with an (n, 3) table of attribute
    indices in (color, digit, position) order.

    """

    images: NDArray[np.float32]
    labels: NDArray[np.uint8]
    source_ids: NDArray[np.int64]
    train_indices: NDArray[np.int64]
    eval_indices: NDArray[np.int64]
    seed: int
    size: int
    mix: float

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def attributes(self, index: int) -> CdpAttributes:
        return CdpAttributes.from_indices(self.labels[index])

    def class_ids(self, task: TaskSpec) -> NDArray[np.int64]:
        return class_ids(self.labels, task)

    def split(self, which: str) -> NDArray[np.int64]:
        if which == "train":
            return self.train_indices
        if which == "eval":
            return self.eval_indices
        raise ValueError(f"Unknown split '{which}'")

    def subset(self, indices: Sequence[int] | NDArray) -> "CdpDataset":
        """
        Restrict to `indices` (kept in the given order); each kept sample keeps
        the split it had.

        """
        indices = np.asarray(indices, dtype=np.int64)
        remap = np.full(len(self), -1, dtype=np.int64)
        remap[indices] = np.arange(indices.size)
        train = remap[self.train_indices]
        evals = remap[self.eval_indices]
        return CdpDataset(
            images=self.images[indices],
            labels=self.labels[indices],
            source_ids=self.source_ids[indices],
            train_indices=np.sort(train[train >= 0]),
            eval_indices=np.sort(evals[evals >= 0]),
            seed=self.seed,
            size=self.size,
            mix=self.mix,
        )

    def where(self, attribute: Attribute, values: Iterable) -> "CdpDataset":
        allowed = [ATTRIBUTE_VALUES[attribute].index(v) for v in values]
        column = self.labels[:, ATTRIBUTE_ORDER.index(attribute)]
        return self.subset(np.flatnonzero(np.isin(column, allowed)))


def make_dataset(n: int, seed: int, size: int, mix: float) -> CdpDataset:
    """
    Generate n CDP samples; a pure function of its arguments.

    """
    if n < 1:
        raise ValueError(f"Dataset size must be at least 1, got {n}")
    check_size(size)

    images = np.empty((n, 3, size, size), dtype=np.float32)
    labels = np.empty((n, len(ATTRIBUTE_ORDER)), dtype=np.uint8)
    with progress_bar("Rendering CDP images", total=n) as (progress, task):
        for index in range(n):
            attrs = sample_attributes(seed, index)
            labels[index] = attrs.as_indices()
            images[index] = render(attrs, background_seed(seed, index), size, mix)
            progress.advance(task)

    train, evals = split_indices(n, seed)
    LOGGER.info(
        f"Generated {n} CDP samples (size={size}, mix={mix}, seed={seed}): "
        f"{train.size} train / {evals.size} eval"
    )
    return CdpDataset(
        images=images,
        labels=labels,
        source_ids=np.arange(n, dtype=np.int64),
        train_indices=train,
        eval_indices=evals,
        seed=seed,
        size=size,
        mix=mix,
    )


def background_only(n: int, seed: int, size: int) -> NDArray[np.float32]:
    check_size(size)
    return np.stack([value_noise(background_seed(seed, i), size) for i in range(n)])


def uniform_noise(n: int, seed: int, size: int) -> NDArray[np.float32]:
    check_size(size)
    rng = np.random.default_rng(seed)
    return rng.random((n, 3, size, size), dtype=np.float32)
