from dataclasses import dataclass, field
from hashlib import sha256
from typing import Iterator, Literal, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mirig.diffengine.errors import ShapeError

InitScheme = Literal["he_uniform", "fan_in_uniform", "zeros"]


def as_tensor(value: ArrayLike, dtype: type[np.floating] = np.float32) -> NDArray:
    """
    Copy into a C-contiguous array of the engine dtype.

    """
    return np.ascontiguousarray(np.asarray(value, dtype=dtype))


@dataclass(frozen=True)
class ParamSpec:
    shape: tuple[int, ...]
    init: InitScheme = "he_uniform"
    fan_in: int = 1


@dataclass
class ParamSet:
    """
    Named float32 parameters plus the seed that produced their initial values.

    Names are unique by construction. The digest covers names, shapes and raw
    bytes so two runs with the same seed can be compared bit for bit.

    """

    values: dict[str, NDArray] = field(default_factory=dict)
    rng_seed: int = 0

    @classmethod
    def initialize(cls, specs: Mapping[str, ParamSpec], seed: int) -> "ParamSet":
        # Sorted order keeps initial values independent of graph construction order
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        values: dict[str, NDArray] = {}
        for name in sorted(specs):
            spec = specs[name]
            if spec.init == "zeros":
                values[name] = np.zeros(spec.shape, dtype=np.float32)
                continue
            gain = 6.0 if spec.init == "he_uniform" else 1.0
            bound = float(np.sqrt(gain / max(spec.fan_in, 1)))
            values[name] = rng.uniform(-bound, bound, size=spec.shape).astype(
                np.float32
            )
        return cls(values=values, rng_seed=seed)

    def __getitem__(self, name: str) -> NDArray:
        return self.values[name]

    def __contains__(self, name: object) -> bool:
        return name in self.values

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def copy(self) -> "ParamSet":
        return ParamSet(
            values={k: v.copy() for k, v in self.values.items()},
            rng_seed=self.rng_seed,
        )

    def astype(self, dtype: type[np.floating]) -> "ParamSet":
        return ParamSet(
            values={k: v.astype(dtype) for k, v in self.values.items()},
            rng_seed=self.rng_seed,
        )

    def subset(self, prefix: str) -> "ParamSet":
        return ParamSet(
            values={k: v for k, v in self.values.items() if k.startswith(prefix)},
            rng_seed=self.rng_seed,
        )

    def merged(self, other: "ParamSet") -> "ParamSet":
        overlap = set(self.values) & set(other.values)
        if overlap:
            raise ShapeError(f"Parameter names collide: {sorted(overlap)}")
        return ParamSet(values={**self.values, **other.values}, rng_seed=self.rng_seed)

    def check_specs(self, specs: Mapping[str, ParamSpec]) -> None:
        for name, spec in specs.items():
            if name not in self.values:
                raise ShapeError(f"Parameter '{name}' is missing")
            if self.values[name].shape != spec.shape:
                raise ShapeError(
                    f"Parameter '{name}' has shape {self.values[name].shape}, "
                    f"expected {spec.shape}"
                )

    def digest(self) -> str:
        hasher = sha256()
        for name in self:
            array = np.ascontiguousarray(self.values[name], dtype=np.float32)
            hasher.update(name.encode())
            hasher.update(repr(array.shape).encode())
            hasher.update(array.tobytes())
        return hasher.hexdigest()
