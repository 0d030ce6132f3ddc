"""Candlestick rasterizer: a price slice in, a small RGB tensor out.

This is deliberately not a plotting library.  Golden-file tests and the
feature pipeline need byte-identical output across machines, so everything
here is integer pixel arithmetic with no anti-aliasing: each pixel ends up
exactly background, up color or down color.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .marketdata import OhlcSeries, PriceScale

__all__ = [
    "RenderStyle",
    "PixelTensor",
    "render",
    "render_binary",
    "write_ppm",
    "read_ppm",
]

RGB = tuple[int, int, int]


@dataclass(frozen=True)
class RenderStyle:
    dpi: int = 10
    canvas_inches: tuple[float, float] = (6.4, 4.8)  # width, height
    up_color: RGB = (0, 255, 0)
    down_color: RGB = (255, 0, 0)
    background: RGB = (255, 255, 255)
    wick_width_px: int = 1

    def __post_init__(self):
        if self.dpi < 1:
            raise ValueError("dpi must be a positive integer")
        if self.wick_width_px < 1:
            raise ValueError("wick_width_px must be a positive integer")
        if self.up_color == self.down_color:
            raise ValueError("up_color and down_color must differ")
        for c in (self.up_color, self.down_color):
            if c == self.background:
                raise ValueError("candle colors must contrast with background")

    @property
    def width_px(self) -> int:
        return round(self.canvas_inches[0] * self.dpi)

    @property
    def height_px(self) -> int:
        return round(self.canvas_inches[1] * self.dpi)


@dataclass(frozen=True)
class PixelTensor:
    """Channel-major RGB image, values 0..255."""

    data: np.ndarray  # uint8, shape (3, height, width)

    def __post_init__(self):
        d = np.ascontiguousarray(self.data, dtype=np.uint8)
        if d.ndim != 3 or d.shape[0] != 3:
            raise ValueError(f"expected (3, H, W) data, got shape {d.shape}")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def channels(self) -> int:
        return 3

    @property
    def height(self) -> int:
        return int(self.data.shape[1])

    @property
    def width(self) -> int:
        return int(self.data.shape[2])

    def __len__(self) -> int:
        return int(self.data.size)

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    def to_float(self, normalize: bool = False) -> np.ndarray:
        out = self.data.astype(np.float64)
        return out / 255.0 if normalize else out


def _price_row(v: float, y_lo: float, y_hi: float, height: int) -> int:
    """Map a price to a pixel row; row 0 is the top (highest price).

    The fraction is rounded to 9 decimals before pixel rounding so that
    adding a constant to all prices (which perturbs the intermediate floats
    by an ulp or two) cannot flip a pixel.
    """
    frac = (y_hi - v) / (y_hi - y_lo)
    return int(np.floor(round(frac * (height - 1), 9) + 0.5))


def render(series: OhlcSeries, start: int, end: int, style: RenderStyle = RenderStyle()) -> PixelTensor:
    """Render bars [start, end] of a log-scaled series as a candlestick image.

    Vertical range is [min low, max high] over the slice padded by 2% of the
    range on each side; bars are laid out left to right on an integer grid.
    A slice whose four prices are all identical has no vertical extent and
    renders as a single mid-height horizontal line.
    """
    if series.scale is not PriceScale.NATURAL_LOG:
        raise ValueError("render expects a log-scaled series")
    n_total = len(series)
    if not (0 <= start <= end < n_total):
        raise ValueError(f"slice [{start}, {end}] out of range for {n_total} bars")
    n = end - start + 1
    if n < 2:
        raise ValueError("slice must span at least 2 bars")

    height, width = style.height_px, style.width_px
    img = np.empty((3, height, width), dtype=np.uint8)
    for ch in range(3):
        img[ch].fill(style.background[ch])

    bars = series.bars[start : end + 1]
    y_min = min(b.low for b in bars)
    y_max = max(b.high for b in bars)

    if y_max == y_min:
        row = height // 2
        for ch in range(3):
            img[ch, row, :] = style.up_color[ch]
        return PixelTensor(img)

    pad = 0.02 * (y_max - y_min)
    y_lo, y_hi = y_min - pad, y_max + pad

    body_w = max(1, width // n - 1)
    for k, bar in enumerate(bars):
        left = (k * width) // n
        right = min(left + body_w - 1, width - 1)
        color = style.up_color if bar.close >= bar.open else style.down_color

        wick_left = max(left, left + (body_w - style.wick_width_px) // 2)
        wick_right = min(right, wick_left + style.wick_width_px - 1)
        top = _price_row(bar.high, y_lo, y_hi, height)
        bot = _price_row(bar.low, y_lo, y_hi, height)
        for ch in range(3):
            img[ch, top : bot + 1, wick_left : wick_right + 1] = color[ch]

        # body over the wick; open == close leaves a 1-px horizontal line
        b_top = _price_row(max(bar.open, bar.close), y_lo, y_hi, height)
        b_bot = _price_row(min(bar.open, bar.close), y_lo, y_hi, height)
        for ch in range(3):
            img[ch, b_top : b_bot + 1, left : right + 1] = color[ch]

    return PixelTensor(img)


def render_binary(t: PixelTensor) -> PixelTensor:
    """Snap every byte to 0 or 255 (threshold at 128)."""
    return PixelTensor(np.where(t.data < 128, 0, 255).astype(np.uint8))


def write_ppm(t: PixelTensor, path: str | Path) -> None:
    """Debug export as binary PPM (P6), viewable almost anywhere."""
    header = f"P6\n{t.width} {t.height}\n255\n".encode("ascii")
    interleaved = np.moveaxis(t.data, 0, -1)  # (H, W, 3)
    Path(path).write_bytes(header + interleaved.tobytes())


def read_ppm(path: str | Path) -> PixelTensor:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError(f"{path}: not a P6 PPM written by write_ppm")
    w, h = (int(x) for x in parts[1].split())
    pixels = np.frombuffer(parts[3][: w * h * 3], dtype=np.uint8).reshape(h, w, 3)
    return PixelTensor(np.moveaxis(pixels, -1, 0))
