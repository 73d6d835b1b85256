from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

VALUES_PER_ATTRIBUTE = 4


class Attribute(Enum):
    COLOR = "color"
    DIGIT = "digit"
    POSITION = "position"


class Color(Enum):
    RED = "red"
    GREEN = "green"
    BLUE = "blue"
    WHITE = "white"


class Digit(IntEnum):
    TWO = 2
    THREE = 3
    FOUR = 4
    FIVE = 5


class Position(Enum):
    UPPER_LEFT = "upper_left"
    UPPER_RIGHT = "upper_right"
    LOWER_LEFT = "lower_left"
    LOWER_RIGHT = "lower_right"


# Column order of every label table
ATTRIBUTE_ORDER: tuple[Attribute, ...] = (
    Attribute.COLOR,
    Attribute.DIGIT,
    Attribute.POSITION,
)

ATTRIBUTE_VALUES: dict[Attribute, tuple[Enum, ...]] = {
    Attribute.COLOR: tuple(Color),
    Attribute.DIGIT: tuple(Digit),
    Attribute.POSITION: tuple(Position),
}


@dataclass(frozen=True)
class CdpAttributes:
    color: Color
    digit: Digit
    position: Position

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "CdpAttributes":
        color, digit, position = (int(i) for i in indices)
        return cls(
            color=tuple(Color)[color],
            digit=tuple(Digit)[digit],
            position=tuple(Position)[position],
        )

    def index(self, attribute: Attribute) -> int:
        value = getattr(self, attribute.value)
        return ATTRIBUTE_VALUES[attribute].index(value)

    def as_indices(self) -> tuple[int, int, int]:
        color, digit, position = (self.index(a) for a in ATTRIBUTE_ORDER)
        return color, digit, position


@dataclass(frozen=True)
class TaskSpec:
    """
    A downstream task: the subset of attributes whose joint value is the class.

    The subset is stored in canonical attribute order, so `color,digit` and
    `digit,color` are the same task.

    """

    attribute_subset: tuple[Attribute, ...]

    def __post_init__(self):
        unique = set(self.attribute_subset)
        if len(unique) != len(self.attribute_subset):
            raise ValueError(f"Duplicate attributes in task: {self.attribute_subset}")
        canonical = tuple(a for a in ATTRIBUTE_ORDER if a in unique)
        object.__setattr__(self, "attribute_subset", canonical)

    @classmethod
    def of(cls, *attributes: Attribute | str) -> "TaskSpec":
        return cls(tuple(Attribute(a) for a in attributes))

    @classmethod
    def all(cls) -> "TaskSpec":
        return cls(ATTRIBUTE_ORDER)

    @classmethod
    def parse(cls, value: str) -> "TaskSpec":
        """
        Accepts `all`, a single attribute, or a comma/plus separated list.

        """
        value = value.strip().lower()
        if value == "all":
            return cls.all()
        if not value:
            return cls(())
        parts = value.replace("+", ",").split(",")
        return cls.of(*(p.strip() for p in parts if p.strip()))

    @property
    def num_classes(self) -> int:
        return VALUES_PER_ATTRIBUTE ** len(self.attribute_subset)

    @property
    def name(self) -> str:
        if self.attribute_subset == ATTRIBUTE_ORDER:
            return "all"
        if not self.attribute_subset:
            return "none"
        return "+".join(a.value for a in self.attribute_subset)

    def __str__(self) -> str:
        return self.name


PROBE_TASKS: tuple[TaskSpec, ...] = (
    TaskSpec.of(Attribute.COLOR),
    TaskSpec.of(Attribute.DIGIT),
    TaskSpec.of(Attribute.POSITION),
    TaskSpec.all(),
)


def class_entropy(task: TaskSpec) -> float:
    """
    Entropy of the task label in bits. Attributes are independent and uniform over
    four values, so each contributes exactly two bits.

    """
    return float(len(task.attribute_subset) * np.log2(VALUES_PER_ATTRIBUTE))


def class_ids(labels: NDArray, task: TaskSpec) -> NDArray:
    """
    Mixed-radix class id of each row of an (n, 3) attribute-index table.

    """
    ids = np.zeros(labels.shape[0], dtype=np.int64)
    for attribute in task.attribute_subset:
        column = ATTRIBUTE_ORDER.index(attribute)
        ids = ids * VALUES_PER_ATTRIBUTE + labels[:, column].astype(np.int64)
    return ids


def sample_attributes(rng_seed: int, index: int) -> CdpAttributes:
    rng = np.random.default_rng([rng_seed, index])
    return CdpAttributes.from_indices(
        rng.integers(0, VALUES_PER_ATTRIBUTE, size=len(ATTRIBUTE_ORDER))
    )
