from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

JITTER_AMPLITUDE = 0.8
MIN_CROP_AREA = 0.08

_GRAY_AXIS = np.full(3, 1 / np.sqrt(3))
_CROSS = np.array(
    [
        [0.0, -_GRAY_AXIS[2], _GRAY_AXIS[1]],
        [_GRAY_AXIS[2], 0.0, -_GRAY_AXIS[0]],
        [-_GRAY_AXIS[1], _GRAY_AXIS[0], 0.0],
    ]
)


def _check_strength(strength: float) -> None:
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"Augmentation strength must be in [0, 1], got {strength}")


@dataclass(frozen=True)
class JitterParams:
    factors: NDArray[np.float64]
    angle: float


def sample_jitter_params(strength: float, rng: np.random.Generator) -> JitterParams:
    """
    Per-channel factors uniform in [1 - 0.8s, 1 + 0.8s] and a hue angle uniform in
    [-s*pi/2, s*pi/2]. The same number of draws is consumed at every strength, so
    one seed gives comparable views across a strength sweep.

    """
    _check_strength(strength)
    unit = rng.uniform(-1.0, 1.0, size=4)
    return JitterParams(
        factors=1.0 + JITTER_AMPLITUDE * strength * unit[:3],
        angle=float(strength * np.pi / 2 * unit[3]),
    )


def hue_rotation(angle: float) -> NDArray[np.float64]:
    """
    Rotation of RGB space about the gray axis; keeps the channel mean fixed.
    """
    cos, sin = np.cos(angle), np.sin(angle)
    return (
        cos * np.eye(3)
        + sin * _CROSS
        + (1 - cos) * np.outer(_GRAY_AXIS, _GRAY_AXIS)
    )


def apply_color_jitter(image: NDArray, params: JitterParams) -> NDArray[np.float32]:
    scaled = image * params.factors[:, None, None]
    rotated = np.einsum("ij,jhw->ihw", hue_rotation(params.angle), scaled)
    return np.clip(rotated, 0.0, 1.0).astype(np.float32)


def color_jitter(
    image: NDArray, strength: float, rng: np.random.Generator
) -> NDArray[np.float32]:
    params = sample_jitter_params(strength, rng)
    if strength == 0.0:
        return image.astype(np.float32, copy=True)
    return apply_color_jitter(image, params)


@dataclass(frozen=True)
class CropParams:
    """Crop box in pixel units of the source canvas."""

    top: float
    left: float
    height: float
    width: float


def sample_crop_params(
    size: int, strength: float, rng: np.random.Generator
) -> CropParams:
    """
    Area fraction uniform in [1 - 0.92s, 1], log-uniform aspect ratio in
    [1/(1+s), 1+s], location uniform over the positions where the box fits.

    """
    _check_strength(strength)
    area_draw, aspect_draw, top_draw, left_draw = rng.random(4)
    area = 1.0 - (1.0 - MIN_CROP_AREA) * strength * area_draw
    aspect = float(np.exp(np.log1p(strength) * (2 * aspect_draw - 1)))
    width = min(1.0, np.sqrt(area * aspect))
    height = min(1.0, np.sqrt(area / aspect))
    return CropParams(
        top=float(top_draw * (1 - height) * size),
        left=float(left_draw * (1 - width) * size),
        height=float(height * size),
        width=float(width * size),
    )


def _sample_axis(
    start: float, extent: float, size: int
) -> tuple[NDArray, NDArray, NDArray]:
    # Output pixel centers mapped into the crop box, clamped to the canvas
    coords = start + (np.arange(size) + 0.5) * (extent / size) - 0.5
    coords = np.clip(coords, 0.0, size - 1)
    lower = np.minimum(np.floor(coords).astype(int), size - 1)
    upper = np.minimum(lower + 1, size - 1)
    return lower, upper, coords - lower


def resized_crop(image: NDArray, params: CropParams) -> NDArray[np.float32]:
    """
    Bilinear resample of the crop box back onto the full canvas.
    """
    size = image.shape[-1]
    r0, r1, fr = _sample_axis(params.top, params.height, size)
    c0, c1, fc = _sample_axis(params.left, params.width, size)
    rows = (
        image[:, r0, :] * (1 - fr)[None, :, None]
        + image[:, r1, :] * fr[None, :, None]
    )
    out = rows[:, :, c0] * (1 - fc)[None, None, :] + rows[:, :, c1] * fc[None, None, :]
    return out.astype(np.float32)


def random_resized_crop(
    image: NDArray, strength: float, rng: np.random.Generator
) -> NDArray[np.float32]:
    params = sample_crop_params(image.shape[-1], strength, rng)
    if strength == 0.0:
        return image.astype(np.float32, copy=True)
    return resized_crop(image, params)
