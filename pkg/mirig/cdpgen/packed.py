import struct
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from mirig.cdpgen.attributes import VALUES_PER_ATTRIBUTE, Digit
from mirig.cdpgen.dataset import CdpDataset, split_indices
from mirig.constants import PACKED_FORMAT_VERSION, PACKED_MAGIC
from mirig.logger import LOGGER

PACKED_FILENAME = "cdp.bin"
MANIFEST_FILENAME = "cdp.json"

_HEADER = struct.Struct("<4sIH")
_MIN_DIGIT = min(Digit)


class PackedFormatError(ValueError):
    pass


class PackedManifest(BaseModel):
    format_version: int = PACKED_FORMAT_VERSION
    n: int
    seed: int
    size: int
    mix: float


def _record_dtype(size: int) -> np.dtype:
    return np.dtype(
        [
            ("color", "u1"),
            ("digit", "u1"),
            ("position", "u1"),
            ("pixels", "<f4", (3 * size * size,)),
        ]
    )


def _resolve(path: Path) -> Path:
    return path / PACKED_FILENAME if path.is_dir() else path


def write_packed(dataset: CdpDataset, directory: Path) -> Path:
    """
    Write `cdp.bin` (magic, u32 count, u16 size, then one little-endian record per
    sample) and the `cdp.json` sidecar manifest into `directory`.

    """
    directory.mkdir(parents=True, exist_ok=True)
    n, size = len(dataset), dataset.size

    records = np.empty(n, dtype=_record_dtype(size))
    records["color"] = dataset.labels[:, 0]
    records["digit"] = dataset.labels[:, 1] + _MIN_DIGIT
    records["position"] = dataset.labels[:, 2]
    records["pixels"] = dataset.images.reshape(n, -1)

    target = directory / PACKED_FILENAME
    with target.open("wb") as handle:
        handle.write(_HEADER.pack(PACKED_MAGIC, n, size))
        handle.write(records.tobytes())

    manifest = PackedManifest(n=n, seed=dataset.seed, size=size, mix=dataset.mix)
    (directory / MANIFEST_FILENAME).write_text(manifest.model_dump_json(indent=2))
    LOGGER.info(f"Wrote {n} samples to {target}")
    return target


def read_packed(path: Path) -> CdpDataset:
    """
    Load a packed file (or a directory holding `cdp.bin`). Without a sidecar the
    split is derived from seed 0 and mix is recorded as unknown (NaN).

    """
    target = _resolve(path)
    try:
        raw = target.read_bytes()
    except OSError as exc:
        raise PackedFormatError(f"Cannot read packed dataset {target}: {exc}") from exc

    if len(raw) < _HEADER.size:
        raise PackedFormatError(f"{target} is truncated: no complete header")
    magic, count, size = _HEADER.unpack_from(raw)
    if magic != PACKED_MAGIC:
        raise PackedFormatError(
            f"{target} has magic {magic!r}, expected {PACKED_MAGIC!r}"
        )
    if size == 0:
        raise PackedFormatError(f"{target} declares image size 0")

    dtype = _record_dtype(size)
    body = raw[_HEADER.size :]
    if len(body) != count * dtype.itemsize:
        raise PackedFormatError(
            f"{target} declares {count} samples of {dtype.itemsize} bytes but holds "
            f"{len(body)} bytes of records"
        )
    records = np.frombuffer(body, dtype=dtype, count=count)

    digits = records["digit"].astype(np.int64) - _MIN_DIGIT
    labels = np.stack(
        [
            records["color"].astype(np.int64),
            digits,
            records["position"].astype(np.int64),
        ],
        axis=1,
    )
    if labels.size and (labels.min() < 0 or labels.max() >= VALUES_PER_ATTRIBUTE):
        raise PackedFormatError(f"{target} holds out-of-range attribute codes")

    manifest_path = target.parent / MANIFEST_FILENAME
    if manifest_path.exists():
        manifest = PackedManifest.model_validate_json(manifest_path.read_text())
        if manifest.format_version != PACKED_FORMAT_VERSION:
            raise PackedFormatError(
                f"{manifest_path} has format version {manifest.format_version}, "
                f"expected {PACKED_FORMAT_VERSION}"
            )
        if manifest.n != count or manifest.size != size:
            raise PackedFormatError(
                f"{manifest_path} describes {manifest.n}x{manifest.size} samples but "
                f"{target} holds {count}x{size}"
            )
        seed, mix = manifest.seed, manifest.mix
    else:
        LOGGER.warning(f"No manifest next to {target}; using seed 0 for the split")
        seed, mix = 0, float("nan")

    train, evals = split_indices(count, seed)
    return CdpDataset(
        images=records["pixels"].reshape(count, 3, size, size).copy(),
        labels=labels.astype(np.uint8),
        source_ids=np.arange(count, dtype=np.int64),
        train_indices=train,
        eval_indices=evals,
        seed=seed,
        size=size,
        mix=mix,
    )
