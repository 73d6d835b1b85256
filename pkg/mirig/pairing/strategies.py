from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen.attributes import TaskSpec
from mirig.config.config import PairingConfig
from mirig.pairing.augment import color_jitter, random_resized_crop


class AugmentOp(Enum):
    CROP = "crop"
    JITTER = "jitter"


_AUGMENTATIONS: dict[
    AugmentOp, Callable[[NDArray, float, np.random.Generator], NDArray]
] = {
    AugmentOp.CROP: random_resized_crop,
    AugmentOp.JITTER: color_jitter,
}


@dataclass(frozen=True)
class AugmentSpec:
    op: AugmentOp
    strength: float

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"Strength must be in [0, 1], got {self.strength}")

    def apply(self, image: NDArray, rng: np.random.Generator) -> NDArray:
        return _AUGMENTATIONS[self.op](image, self.strength, rng)


@dataclass(frozen=True)
class SameClass:
    task: TaskSpec
    rng_seed: int = 0

    def __post_init__(self):
        if not self.task.attribute_subset:
            raise ValueError("SameClass pairing needs a nonempty attribute subset")

    def describe(self) -> str:
        return f"same_class({self.task.name})"


@dataclass(frozen=True)
class Augmented:
    ops: tuple[AugmentSpec, ...]
    rng_seed: int = 0

    def __post_init__(self):
        if not self.ops:
            raise ValueError("Augmented pairing needs at least one op")

    @property
    def is_identity(self) -> bool:
        return all(spec.strength == 0.0 for spec in self.ops)

    def apply(self, image: NDArray, rng: np.random.Generator) -> NDArray:
        for spec in self.ops:
            image = spec.apply(image, rng)
        return image

    def describe(self) -> str:
        parts = ",".join(f"{spec.op.value}={spec.strength:g}" for spec in self.ops)
        return f"augment({parts})"


PairingStrategy = SameClass | Augmented


def simclr_strategy(strength: float = 0.5, rng_seed: int = 0) -> Augmented:
    """
    Crop followed by color jitter at a shared strength.
    """
    return Augmented(
        ops=(
            AugmentSpec(AugmentOp.CROP, strength),
            AugmentSpec(AugmentOp.JITTER, strength),
        ),
        rng_seed=rng_seed,
    )


def strategy_from_config(config: PairingConfig) -> PairingStrategy:
    if config.kind == "same_class":
        return SameClass(task=config.task, rng_seed=config.seed)
    return Augmented(
        ops=tuple(AugmentSpec(AugmentOp(op), config.strength) for op in config.ops),
        rng_seed=config.seed,
    )


def strategy_to_config(strategy: PairingStrategy) -> PairingConfig:
    if isinstance(strategy, SameClass):
        return PairingConfig(
            kind="same_class",
            attributes=list(strategy.task.attribute_subset),
            seed=strategy.rng_seed,
        )
    strengths = {spec.strength for spec in strategy.ops}
    if len(strengths) != 1:
        raise ValueError("Only augment pairings with one shared strength have a config")
    return PairingConfig(
        kind="augment",
        ops=[spec.op.value for spec in strategy.ops],
        strength=strengths.pop(),
        seed=strategy.rng_seed,
    )
