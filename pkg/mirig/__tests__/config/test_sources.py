import json
from pathlib import Path

import pytest
from pydantic import TypeAdapter, ValidationError

from mirig.cdpgen import Attribute, Color, Digit, Position
from mirig.config import NegativeSource, TrainConfig
from mirig.config.sources import (
    BackgroundSource,
    CdpSubsetSource,
    NoiseSource,
    PackedSource,
)

# ─────────────────────────────────────────────────────────────────────────────
# Utilities
# ─────────────────────────────────────────────────────────────────────────────

NegativeSourceAdapter = TypeAdapter(NegativeSource)

CDP_CASES: list[tuple[str, Attribute, list]] = [
    ("cdp://colors/blue,white", Attribute.COLOR, [Color.BLUE, Color.WHITE]),
    ("cdp://digits/2,3", Attribute.DIGIT, [Digit.TWO, Digit.THREE]),
    ("cdp://positions/upper_left", Attribute.POSITION, [Position.UPPER_LEFT]),
]

INVALID_URIS: list[str] = [
    "cdp://colors/purple",  # unknown value
    "cdp://colors/",  # no values
    "cdp://shapes/circle",  # unknown attribute
    "noise://gaussian",  # unsupported distribution
    "background://stripes",
    "packed://",
    "s3://bucket/key",  # unsupported scheme
    "colors/blue",  # no scheme at all
]


# ─────────────────────────────────────────────────────────────────────────────
# CDP subsets
# ─────────────────────────────────────────────────────────────────────────────
@pytest.mark.parametrize("uri,attribute,values", CDP_CASES, ids=lambda c: str(c))
def test_cdp_subset_roundtrip(uri: str, attribute: Attribute, values: list) -> None:
    source = CdpSubsetSource.model_validate(uri)
    assert source.attribute == attribute
    assert source.enum_values() == values
    assert json.loads(source.model_dump_json()) == uri
    assert str(source) == uri


def test_cdp_values_are_trimmed() -> None:
    source = CdpSubsetSource.model_validate("cdp://colors/red, green")
    assert source.values == ["red", "green"]
    assert str(source) == "cdp://colors/red,green"


# ─────────────────────────────────────────────────────────────────────────────
# Alias coercion
# ─────────────────────────────────────────────────────────────────────────────
@pytest.mark.parametrize(
    "uri,expected_type",
    [
        ("cdp://colors/blue,white", CdpSubsetSource),
        ("noise://uniform", NoiseSource),
        ("background://texture", BackgroundSource),
        ("packed://datasets/cifar5b.cdp", PackedSource),
    ],
    ids=lambda x: str(x),
)
def test_negative_source_coercion(uri: str, expected_type: type) -> None:
    source = NegativeSourceAdapter.validate_python(uri)
    assert isinstance(source, expected_type)
    assert NegativeSourceAdapter.dump_python(source) == uri


def test_packed_path() -> None:
    source = NegativeSourceAdapter.validate_python("packed://datasets/cifar5b.cdp")
    assert source.path == Path("datasets/cifar5b.cdp")


@pytest.mark.parametrize("bad_uri", INVALID_URIS, ids=lambda x: x)
def test_invalid_uri_rejected(bad_uri: str) -> None:
    with pytest.raises(ValidationError):
        NegativeSourceAdapter.validate_python(bad_uri)


def test_non_string_rejected() -> None:
    with pytest.raises(ValidationError):
        NegativeSourceAdapter.validate_python(42)


# ─────────────────────────────────────────────────────────────────────────────
# Integration: a source inside the training config
# ─────────────────────────────────────────────────────────────────────────────


def test_train_config_negatives_roundtrip() -> None:
    config = TrainConfig.model_validate({"negatives": "noise://uniform"})
    assert isinstance(config.negatives, NoiseSource)
    dumped = config.model_dump(mode="json")
    assert dumped["negatives"] == "noise://uniform"
    assert TrainConfig.model_validate(dumped) == config


def test_negatives_change_config_hash() -> None:
    assert (
        TrainConfig(negatives="noise://uniform").config_hash()
        != TrainConfig().config_hash()
    )
