from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from mirig.cdpgen.attributes import CdpAttributes, Color, Digit, Position
from mirig.constants import SUPPORTED_IMAGE_SIZES

FONT_ROWS = 7
FONT_COLS = 5
GLYPH_FILL = 0.7
NOISE_OCTAVES = (2, 4, 8)

_FONT: dict[Digit, tuple[str, ...]] = {
    Digit.TWO: (
        ".###.",
        "#...#",
        "....#",
        "...#.",
        "..#..",
        ".#...",
        "#####",
    ),
    Digit.THREE: (
        "#####",
        "...#.",
        "..#..",
        "...#.",
        "....#",
        "#...#",
        ".###.",
    ),
    Digit.FOUR: (
        "...#.",
        "..##.",
        ".#.#.",
        "#..#.",
        "#####",
        "...#.",
        "...#.",
    ),
    Digit.FIVE: (
        "#####",
        "#....",
        "####.",
        "....#",
        "....#",
        "#...#",
        ".###.",
    ),
}

COLOR_RGB: dict[Color, tuple[float, float, float]] = {
    Color.RED: (1.0, 0.0, 0.0),
    Color.GREEN: (0.0, 1.0, 0.0),
    Color.BLUE: (0.0, 0.0, 1.0),
    Color.WHITE: (1.0, 1.0, 1.0),
}


class UnsupportedSizeError(ValueError):
    pass


def check_size(size: int) -> None:
    if size not in SUPPORTED_IMAGE_SIZES:
        raise UnsupportedSizeError(
            f"Image size {size} is not supported; use one of {SUPPORTED_IMAGE_SIZES}"
        )


@dataclass(frozen=True)
class GlyphBox:
    top: int
    left: int
    height: int
    width: int


def glyph_box(position: Position, size: int) -> GlyphBox:
    """
    Where a glyph lands on the canvas: centered in its quadrant, scaled to 70% of
    the quadrant height (never below the native 7 font rows).

    """
    quadrant = size // 2
    height = max(FONT_ROWS, int(GLYPH_FILL * quadrant))
    width = max(FONT_COLS, round(height * FONT_COLS / FONT_ROWS))
    row = 1 if position in (Position.LOWER_LEFT, Position.LOWER_RIGHT) else 0
    col = 1 if position in (Position.UPPER_RIGHT, Position.LOWER_RIGHT) else 0
    return GlyphBox(
        top=row * quadrant + (quadrant - height) // 2,
        left=col * quadrant + (quadrant - width) // 2,
        height=height,
        width=width,
    )


def glyph_template(digit: Digit, height: int, width: int) -> NDArray[np.bool_]:
    bitmap = np.array([[c == "#" for c in row] for row in _FONT[digit]])
    rows = np.arange(height) * FONT_ROWS // height
    cols = np.arange(width) * FONT_COLS // width
    return bitmap[np.ix_(rows, cols)]


def glyph_mask(attrs: CdpAttributes, size: int) -> NDArray[np.bool_]:
    box = glyph_box(attrs.position, size)
    mask = np.zeros((size, size), dtype=bool)
    mask[box.top : box.top + box.height, box.left : box.left + box.width] = (
        glyph_template(attrs.digit, box.height, box.width)
    )
    return mask


def _dilate(mask: NDArray[np.bool_]) -> NDArray[np.bool_]:
    padded = np.pad(mask, 1)
    size = mask.shape[0]
    grown = np.zeros_like(mask)
    for dr in (0, 1, 2):
        for dc in (0, 1, 2):
            grown |= padded[dr : dr + size, dc : dc + size]
    return grown


def _outline(mask: NDArray[np.bool_]) -> NDArray[np.bool_]:
    return _dilate(mask) & ~mask


def value_noise(bg_seed: int, size: int) -> NDArray[np.float32]:
    """
    Seeded multi-octave value noise, one independent texture per channel,
    rescaled to span [0, 1].

    """
    rng = np.random.default_rng(bg_seed)
    texture = np.zeros((3, size, size), dtype=np.float64)
    coords = np.linspace(0.0, 1.0, size)
    for octave, cells in enumerate(NOISE_OCTAVES):
        lattice = rng.random((3, cells + 1, cells + 1))
        t = coords * cells
        i0 = np.minimum(t.astype(int), cells - 1)
        frac = t - i0
        smooth = frac * frac * (3 - 2 * frac)
        rows = (
            lattice[:, i0, :] * (1 - smooth)[None, :, None]
            + lattice[:, i0 + 1, :] * smooth[None, :, None]
        )
        layer = (
            rows[:, :, i0] * (1 - smooth)[None, None, :]
            + rows[:, :, i0 + 1] * smooth[None, None, :]
        )
        texture += layer * 0.5**octave

    low = texture.min(axis=(1, 2), keepdims=True)
    span = texture.max(axis=(1, 2), keepdims=True) - low
    texture = np.where(span > 0, (texture - low) / np.where(span > 0, span, 1), 0)
    return texture.astype(np.float32)


def render(attrs: CdpAttributes, bg_seed: int, size: int, mix: float) -> NDArray:
    """
    Render one CDP image of shape (3, size, size) with values in [0, 1].

    The glyph layer carries the attribute color on glyph pixels and zero
    elsewhere; a one-pixel dark outline is cut into the background so light
    glyphs stay separable from light textures. At mix=1 the outline vanishes and
    the image is exactly the background.

    """
    check_size(size)
    if not 0.0 <= mix <= 1.0:
        raise ValueError(f"mix must be in [0, 1], got {mix}")

    mask = glyph_mask(attrs, size)
    rgb = np.asarray(COLOR_RGB[attrs.color], dtype=np.float32)
    glyph_layer = mask[None, :, :] * rgb[:, None, None]
    if mix == 0.0:
        return glyph_layer.astype(np.float32)

    background = value_noise(bg_seed, size)
    if mix == 1.0:
        return background

    shade = 1 - _outline(mask) * np.float32(1 - mix)
    image = (1 - mix) * glyph_layer + mix * background * shade[None, :, :]
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def oracle_classify(image: NDArray) -> CdpAttributes:
    """
    Hand-written pixel-rule classifier: glyph pixels are those whose brightest
    channel exceeds 0.5, position is the quadrant holding most of them, color
    comes from which channels are lit on the glyph, and the digit is the best
    template match at the glyph's box. Exact for mix <= 0.5.

    At mix = 0.5 a glyph pixel over the darkest background texel and the
    brightest background texel both read exactly 0.5. Only the glyph one can
    touch a lit pixel, since the outline separates glyphs from the background.

    """
    size = image.shape[-1]
    brightest = image.max(axis=0)
    lit = brightest > 0.5
    lit |= (brightest == 0.5) & _dilate(lit)
    quadrant = size // 2
    counts = {
        Position.UPPER_LEFT: lit[:quadrant, :quadrant].sum(),
        Position.UPPER_RIGHT: lit[:quadrant, quadrant:].sum(),
        Position.LOWER_LEFT: lit[quadrant:, :quadrant].sum(),
        Position.LOWER_RIGHT: lit[quadrant:, quadrant:].sum(),
    }
    position = max(counts, key=lambda p: counts[p])

    if lit.any():
        channel_on = image[:, lit].mean(axis=1) > 0.5
    else:
        channel_on = np.zeros(3, dtype=bool)
    if channel_on.all():
        color = Color.WHITE
    else:
        color = (Color.RED, Color.GREEN, Color.BLUE)[int(np.argmax(channel_on))]

    box = glyph_box(position, size)
    window = lit[box.top : box.top + box.height, box.left : box.left + box.width]
    digit = min(
        Digit,
        key=lambda d: int(
            np.count_nonzero(window != glyph_template(d, box.height, box.width))
        ),
    )
    return CdpAttributes(color=color, digit=digit, position=position)
