from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from mirig.diffengine.errors import ShapeError


@dataclass(frozen=True)
class SymDim:
    """
    A batch dimension that is only known at execution time, written as a linear
    combination of named symbols plus a constant (`K`, `2*K`, `K+M`).

    Terms are kept sorted so structurally equal dimensions compare equal, which lets
    shape rules check `concat(K, K)` against a declared `2*K` at build time.

    """

    terms: tuple[tuple[str, int], ...]
    const: int = 0

    @classmethod
    def of(cls, name: str) -> "SymDim":
        return cls(((name, 1),))

    @staticmethod
    def _normalize(
        terms: Iterable[tuple[str, int]], const: int
    ) -> Union["SymDim", int]:
        merged: dict[str, int] = {}
        for name, coeff in terms:
            merged[name] = merged.get(name, 0) + coeff
        kept = tuple(sorted((n, c) for n, c in merged.items() if c != 0))
        if not kept:
            return const
        return SymDim(kept, const)

    def __add__(self, other: "Dim") -> "Dim":
        if isinstance(other, int):
            return self._normalize(self.terms, self.const + other)
        return self._normalize(self.terms + other.terms, self.const + other.const)

    __radd__ = __add__

    def __mul__(self, factor: int) -> "Dim":
        return self._normalize(
            ((n, c * factor) for n, c in self.terms), self.const * factor
        )

    __rmul__ = __mul__

    def resolve(self, bindings: Mapping[str, int]) -> int | None:
        total = self.const
        for name, coeff in self.terms:
            if name not in bindings:
                return None
            total += coeff * bindings[name]
        return total

    def __str__(self) -> str:
        parts = [name if c == 1 else f"{c}*{name}" for name, c in self.terms]
        if self.const:
            parts.append(str(self.const))
        return "+".join(parts)


Dim = Union[int, SymDim]
Shape = tuple[Dim, ...]


def format_shape(shape: Sequence[Dim]) -> str:
    return "(" + ", ".join(str(d) for d in shape) + ")"


def is_concrete(shape: Sequence[Dim]) -> bool:
    return all(isinstance(d, int) for d in shape)


def bind_shapes(
    declared: Mapping[str, Shape], actual: Mapping[str, tuple[int, ...]]
) -> dict[str, int]:
    """
    Bind every symbol in the declared input shapes against concrete arrays.

    Single-symbol dimensions (`K`, `2*K`) bind their symbol; composite ones are
    checked once all their symbols are known. Any inconsistency is a ShapeError.

    """
    bindings: dict[str, int] = {}
    pending: list[tuple[str, int, SymDim, int]] = []

    for name, shape in declared.items():
        if name not in actual:
            raise ShapeError(f"Missing graph input '{name}'")
        got = actual[name]
        if len(got) != len(shape):
            raise ShapeError(
                f"Input '{name}' expects rank {len(shape)} {format_shape(shape)}, "
                f"got shape {tuple(got)}"
            )
        for axis, (dim, size) in enumerate(zip(shape, got)):
            if isinstance(dim, int):
                if dim != size:
                    raise ShapeError(
                        f"Input '{name}' axis {axis} expects {dim}, got {size}"
                    )
                continue
            if len(dim.terms) == 1:
                symbol, coeff = dim.terms[0]
                free = size - dim.const
                if free % coeff != 0 or free // coeff < 1:
                    raise ShapeError(
                        f"Input '{name}' axis {axis} size {size} does not fit {dim}"
                    )
                value = free // coeff
                if bindings.setdefault(symbol, value) != value:
                    raise ShapeError(
                        f"Symbol '{symbol}' bound to {bindings[symbol]} but input "
                        f"'{name}' axis {axis} implies {value}"
                    )
            else:
                pending.append((name, axis, dim, size))

    for name, axis, dim, size in pending:
        resolved = dim.resolve(bindings)
        if resolved is None:
            raise ShapeError(
                f"Input '{name}' axis {axis} uses unbound symbols in {dim}"
            )
        if resolved != size:
            raise ShapeError(
                f"Input '{name}' axis {axis} expects {dim}={resolved}, got {size}"
            )

    unexpected = set(actual) - set(declared)
    if unexpected:
        raise ShapeError(f"Unknown graph inputs: {sorted(unexpected)}")

    return bindings
