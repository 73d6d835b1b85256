import hashlib

import numpy as np
import pytest

from mirig.cdpgen import CdpAttributes, Color, Digit, Position, render
from mirig.pairing import color_jitter, random_resized_crop
from mirig.pairing.augment import (
    JitterParams,
    apply_color_jitter,
    hue_rotation,
    sample_crop_params,
    sample_jitter_params,
)

AUGMENTATIONS = [color_jitter, random_resized_crop]


@pytest.fixture(scope="module")
def image() -> np.ndarray:
    attrs = CdpAttributes(Color.RED, Digit.THREE, Position.LOWER_LEFT)
    return render(attrs, bg_seed=5, size=16, mix=0.3)


@pytest.mark.parametrize("augment", AUGMENTATIONS)
def test_zero_strength_is_identity(augment, image: np.ndarray) -> None:
    out = augment(image, 0.0, np.random.default_rng(0))
    np.testing.assert_array_equal(out, image)


@pytest.mark.parametrize("augment", AUGMENTATIONS)
def test_fixed_seed_is_bit_stable(augment, image: np.ndarray) -> None:
    digests = {
        hashlib.sha256(
            augment(image, 0.5, np.random.default_rng(123)).tobytes()
        ).hexdigest()
        for _ in range(2)
    }
    assert len(digests) == 1


@pytest.mark.parametrize("augment", AUGMENTATIONS)
def test_output_stays_in_unit_range(augment, image: np.ndarray) -> None:
    rng = np.random.default_rng(1)
    for _ in range(50):
        out = augment(image, 1.0, rng)
        assert out.shape == image.shape
        assert out.min() >= 0.0 and out.max() <= 1.0


@pytest.mark.parametrize("strength", [-0.1, 1.1])
def test_strength_out_of_range(strength: float, image: np.ndarray) -> None:
    with pytest.raises(ValueError):
        color_jitter(image, strength, np.random.default_rng(0))
    with pytest.raises(ValueError):
        random_resized_crop(image, strength, np.random.default_rng(0))


def test_jitter_factors_span_configured_range() -> None:
    rng = np.random.default_rng(0)
    factors = np.concatenate(
        [sample_jitter_params(1.0, rng).factors for _ in range(10_000)]
    )
    angles = [sample_jitter_params(1.0, rng).angle for _ in range(1_000)]
    assert 0.2 <= factors.min() < 0.21
    assert 1.79 < factors.max() <= 1.8
    assert max(abs(a) for a in angles) <= np.pi / 2


def test_hue_rotation_preserves_channel_mean() -> None:
    pixel = np.array([0.9, 0.2, 0.4])
    for angle in (-1.2, 0.3, np.pi / 2):
        rotated = hue_rotation(angle) @ pixel
        assert rotated.mean() == pytest.approx(pixel.mean(), abs=1e-12)


@pytest.mark.parametrize("angle,dominant", [(np.pi / 2, 1), (-np.pi / 2, 2)])
def test_quarter_turn_moves_red_to_another_channel(angle: float, dominant: int) -> None:
    red = np.zeros((3, 1, 1), dtype=np.float32)
    red[0] = 1.0
    out = apply_color_jitter(red, JitterParams(factors=np.ones(3), angle=angle))
    assert int(np.argmax(out[:, 0, 0])) == dominant


def test_crop_area_reaches_minimum() -> None:
    rng = np.random.default_rng(0)
    areas = []
    for _ in range(5_000):
        params = sample_crop_params(32, 1.0, rng)
        areas.append(params.height * params.width / 32**2)
    assert min(areas) < 0.1
    assert min(areas) >= 0.08 - 1e-9
    assert max(areas) <= 1.0 + 1e-9


@pytest.mark.parametrize("augment", AUGMENTATIONS)
def test_distortion_grows_with_strength(augment, image: np.ndarray) -> None:
    means = []
    for strength in (0.0, 0.25, 0.5, 0.75, 1.0):
        rng = np.random.default_rng(99)
        distortion = [
            np.sqrt(np.mean((augment(image, strength, rng) - image) ** 2))
            for _ in range(1_000)
        ]
        means.append(float(np.mean(distortion)))
    assert means[0] == 0.0
    assert all(a <= b for a, b in zip(means, means[1:])), means
