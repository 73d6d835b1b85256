import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen import CdpDataset, background_only, read_packed, uniform_noise
from mirig.config.sources import (
    BackgroundSource,
    CdpSubsetSource,
    NegativeSourceBase,
    NoiseSource,
    PackedSource,
)
from mirig.logger import LOGGER

_NEGATIVE_STREAM = 3


def _derived_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, _NEGATIVE_STREAM]).generate_state(1)[0])


def negative_pool(
    source: NegativeSourceBase,
    base: CdpDataset,
    *,
    count: int | None = None,
) -> NDArray[np.float32]:
    """
    Images of the negative-sample dataset D⁻ named by `source`. CDP subsets are
    cut from `base`; generated sources use `count` images (default len(base))
    at base's image size, seeded independently of base's backgrounds.

    """
    count = len(base) if count is None else count
    if isinstance(source, CdpSubsetSource):
        images = base.where(source.attribute, source.enum_values()).images
    elif isinstance(source, BackgroundSource):
        images = background_only(count, _derived_seed(base.seed), base.size)
    elif isinstance(source, NoiseSource):
        images = uniform_noise(count, _derived_seed(base.seed), base.size)
    elif isinstance(source, PackedSource):
        packed = read_packed(source.path)
        if packed.size != base.size:
            raise ValueError(
                f"{source} holds {packed.size}px images, training uses {base.size}px"
            )
        images = packed.images
    else:
        raise TypeError(f"Unsupported negative source {source!r}")

    if len(images) == 0:
        raise ValueError(f"Negative source {source} is empty")
    LOGGER.info(f"Negative pool {source}: {len(images)} images")
    return images
