from abc import ABC, abstractmethod
from pathlib import Path
from typing import Annotated, Literal

from pydantic import (
    BaseModel,
    BeforeValidator,
    field_validator,
    model_serializer,
    model_validator,
)

from mirig.cdpgen.attributes import ATTRIBUTE_VALUES, Attribute


class NegativeSourceBase(BaseModel, ABC):
    """
    By convention, every negative-sample dataset D⁻ is written as a URI whose
    scheme names the kind of source, followed by its arguments.

    For instance:
    cdp://colors/blue,white
    noise://uniform
    background://texture
    packed://datasets/cifar5b.cdp

    Accepts a URI string and dumps back to the same string.
    """

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, v):
        return cls._from_uri(v) if isinstance(v, str) else v

    @model_serializer(mode="plain")
    def _dump(self):
        return str(self)

    @staticmethod
    @abstractmethod
    def _from_uri(v: str) -> dict: ...

    @abstractmethod
    def __str__(self) -> str: ...

    @staticmethod
    def split_uri(v: str) -> tuple[str, str]:
        try:
            scheme, rest = v.split("://", 1)
        except ValueError:
            raise ValueError("Negative source must be in format scheme://argument")
        return scheme, rest


class CdpSubsetSource(NegativeSourceBase):
    """
    CDP samples whose `attribute` takes one of `values`, drawn from the same
    generated dataset as the training data.
    """

    attribute: Attribute
    values: list[str]

    @staticmethod
    def _from_uri(v: str) -> dict:
        scheme, rest = NegativeSourceBase.split_uri(v)
        if scheme != "cdp" or "/" not in rest:
            raise ValueError("cdp source must be cdp://attribute/value,value")
        attribute, values = rest.split("/", 1)
        return {
            "attribute": attribute.removesuffix("s"),
            "values": [value.strip() for value in values.split(",") if value.strip()],
        }

    @model_validator(mode="after")
    def _check_values(self):
        known = {str(getattr(v, "value", v)) for v in ATTRIBUTE_VALUES[self.attribute]}
        unknown = [v for v in self.values if v not in known]
        if not self.values:
            raise ValueError("cdp source must name at least one value")
        if unknown:
            raise ValueError(
                f"Unknown {self.attribute.value} values {unknown}; "
                f"choose from {sorted(known)}"
            )
        return self

    def enum_values(self) -> list:
        lookup = {str(v.value): v for v in ATTRIBUTE_VALUES[self.attribute]}
        return [lookup[v] for v in self.values]

    def __str__(self) -> str:
        return f"cdp://{self.attribute.value}s/{','.join(self.values)}"


class NoiseSource(NegativeSourceBase):
    distribution: Literal["uniform"] = "uniform"

    @staticmethod
    def _from_uri(v: str) -> dict:
        scheme, rest = NegativeSourceBase.split_uri(v)
        if scheme != "noise":
            raise ValueError("noise source must be noise://uniform")
        return {"distribution": rest}

    def __str__(self) -> str:
        return f"noise://{self.distribution}"


class BackgroundSource(NegativeSourceBase):
    texture: Literal["texture"] = "texture"

    @staticmethod
    def _from_uri(v: str) -> dict:
        scheme, rest = NegativeSourceBase.split_uri(v)
        if scheme != "background":
            raise ValueError("background source must be background://texture")
        return {"texture": rest}

    def __str__(self) -> str:
        return f"background://{self.texture}"


class PackedSource(NegativeSourceBase):
    path: Path

    @staticmethod
    def _from_uri(v: str) -> dict:
        scheme, rest = NegativeSourceBase.split_uri(v)
        if scheme != "packed" or not rest.strip():
            raise ValueError("packed source must be packed://path/to/file")
        return {"path": rest}

    @field_validator("path")
    @classmethod
    def _nonempty(cls, value: Path) -> Path:
        if str(value) in ("", "."):
            raise ValueError("packed source needs a file path")
        return value

    def __str__(self) -> str:
        return f"packed://{self.path.as_posix()}"


def _parse_negative_source(v):
    if isinstance(v, NegativeSourceBase):
        return v
    if not isinstance(v, str):
        raise ValueError("NegativeSource expects a URI string")
    scheme = v.split("://", 1)[0]
    if scheme == "cdp":
        return CdpSubsetSource.model_validate(v)
    if scheme == "noise":
        return NoiseSource.model_validate(v)
    if scheme == "background":
        return BackgroundSource.model_validate(v)
    if scheme == "packed":
        return PackedSource.model_validate(v)
    raise ValueError(f"Unsupported negative source scheme '{scheme}'")


NegativeSource = Annotated[
    CdpSubsetSource | NoiseSource | BackgroundSource | PackedSource,
    BeforeValidator(_parse_negative_source),
]
