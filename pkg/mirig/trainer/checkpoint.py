import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ValidationError

from mirig.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from mirig.diffengine import ParamSet, ShapeError, evaluate
from mirig.io import canonical_json
from mirig.trainer.models import (
    ENCODER_PREFIX,
    HEAD_PREFIX,
    Architecture,
    encoder_graph,
    training_graph,
)

_HEADER = struct.Struct("<4sII")
_U32 = struct.Struct("<I")
_RANK = struct.Struct("<B")

ENCODE_CHUNK = 512


class CheckpointFormatError(ValueError):
    def __init__(self, message: str, *, found_version: int | None = None):
        super().__init__(message)
        self.found_version = found_version


class CheckpointMetadata(BaseModel):
    architecture: Architecture
    config_hash: str
    pairing: str
    batch_size: int
    temperature: float
    steps: int
    seed: int
    final_loss_nats: float | None = None
    curve_steps: list[int]
    curve_bits: list[float]


@dataclass
class EncoderCheckpoint:
    """
    Trained f_e and f_p parameters with the metadata that rebuilds their graphs
    and the in-training MI curve (bits at the training batch size).

    """

    metadata: CheckpointMetadata
    params: ParamSet = field(default_factory=ParamSet)

    @property
    def architecture(self) -> Architecture:
        return self.metadata.architecture

    @property
    def repr_dim(self) -> int:
        return self.metadata.architecture.repr_dim

    @property
    def final_train_bits(self) -> float:
        return self.metadata.curve_bits[-1] if self.metadata.curve_bits else 0.0

    def encoder_params(self) -> ParamSet:
        return self.params.subset(f"{ENCODER_PREFIX}.")

    def head_params(self) -> ParamSet:
        return self.params.subset(f"{HEAD_PREFIX}.")

    def encoder_digest(self) -> str:
        return self.encoder_params().digest()


def encode(
    checkpoint: EncoderCheckpoint,
    images: NDArray,
    *,
    unit: bool = False,
) -> NDArray[np.float32]:
    """
    Frozen encoder outputs h (or h / |h| with `unit`) for a stack of images.
    """
    graph = encoder_graph(checkpoint.architecture)
    params = checkpoint.encoder_params()
    output = "h_unit" if unit else "h"
    chunks = [
        evaluate(graph, params, {"x": images[start : start + ENCODE_CHUNK]})[output]
        for start in range(0, len(images), ENCODE_CHUNK)
    ]
    if not chunks:
        return np.zeros((0, checkpoint.repr_dim), dtype=np.float32)
    return np.concatenate(chunks)


# ─────────────────────────────────────────────────────────────────────────────
# Binary format: magic, u32 version, u32 metadata length, metadata JSON, then per
# tensor u32 name length, name, u8 rank, u32 dims, little-endian f32 data
# ─────────────────────────────────────────────────────────────────────────────


def checkpoint_bytes(checkpoint: EncoderCheckpoint) -> bytes:
    metadata = canonical_json(checkpoint.metadata.model_dump(mode="json")).encode()
    parts = [_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(metadata)), metadata]
    for name in checkpoint.params:
        array = checkpoint.params[name]
        encoded = name.encode()
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_RANK.pack(array.ndim))
        parts.extend(_U32.pack(dim) for dim in array.shape)
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, raw: bytes, source: str):
        self.raw = raw
        self.source = source
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.raw):
            raise CheckpointFormatError(
                f"{self.source} is truncated at byte {len(self.raw)}"
            )
        chunk = self.raw[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self.raw)


def checkpoint_from_bytes(raw: bytes, source: str = "checkpoint") -> EncoderCheckpoint:
    reader = _Reader(raw, source)
    magic, version, metadata_length = _HEADER.unpack(reader.take(_HEADER.size))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(
            f"{source} has magic {magic!r}, expected {CHECKPOINT_MAGIC!r}"
        )
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"{source} has format version {version}, expected {CHECKPOINT_VERSION}",
            found_version=version,
        )
    try:
        metadata = CheckpointMetadata.model_validate_json(reader.take(metadata_length))
    except ValidationError as exc:
        raise CheckpointFormatError(f"{source} has invalid metadata: {exc}") from exc

    values: dict[str, NDArray] = {}
    while not reader.exhausted:
        name = reader.take(reader.u32()).decode()
        rank = _RANK.unpack(reader.take(_RANK.size))[0]
        shape = tuple(reader.u32() for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64))
        data = reader.take(4 * count)
        values[name] = np.frombuffer(data, dtype="<f4").reshape(shape).astype(np.float32)

    params = ParamSet(values=values)
    _check_complete(metadata, params, source)
    return EncoderCheckpoint(metadata=metadata, params=params)


def _check_complete(
    metadata: CheckpointMetadata, params: ParamSet, source: str
) -> None:
    # The tensor section has no count, so a cut on a tensor boundary parses cleanly
    expected = training_graph(metadata.architecture, metadata.temperature).params
    missing = sorted(set(expected) - set(params.values))
    unexpected = sorted(set(params.values) - set(expected))
    if missing or unexpected:
        raise CheckpointFormatError(
            f"{source} is truncated or corrupt: missing tensors {missing}, "
            f"unexpected tensors {unexpected}"
        )
    try:
        params.check_specs(expected)
    except ShapeError as exc:
        raise CheckpointFormatError(
            f"{source} does not match its architecture: {exc}"
        ) from exc


def save_checkpoint(checkpoint: EncoderCheckpoint, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(checkpoint))
    return path


def load_checkpoint(path: Path) -> EncoderCheckpoint:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointFormatError(f"Cannot read checkpoint {path}: {exc}") from exc
    return checkpoint_from_bytes(raw, source=str(path))
