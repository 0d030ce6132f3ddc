"""Renderer tests: hand-computed pixel positions, invariance properties, and
five golden reference images.

Run this file directly (python3 tests/test_raster.py) to regenerate the
golden PPMs after a deliberate renderer change.
"""

import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from trendlab.marketdata import OhlcBar, OhlcSeries, PriceScale, to_log
from trendlab.raster import PixelTensor, RenderStyle, read_ppm, render, render_binary, write_ppm
from trendlab.synthetic import SyntheticConfig, generate_stock

from conftest import business_days, make_series

GOLDEN_DIR = Path(__file__).parent / "golden"

WHITE = (255, 255, 255)
GREEN = (0, 255, 0)
RED = (255, 0, 0)


def log_series(bars_ohlc, stock_id="LOG"):
    """Series already on log scale from (open, high, low, close) tuples."""
    dates = business_days(dt.date(2012, 1, 2), len(bars_ohlc))
    bars = tuple(OhlcBar(d, *vals) for d, vals in zip(dates, bars_ohlc))
    return OhlcSeries(stock_id=stock_id, bars=bars, scale=PriceScale.NATURAL_LOG)


def pixel(t: PixelTensor, y: int, x: int) -> tuple[int, int, int]:
    return tuple(int(t.data[c, y, x]) for c in range(3))


# ---------------------------------------------------------------------------
# dimensions and determinism


def test_dimension_law():
    for dpi, h, w in [(10, 48, 64), (20, 96, 128), (60, 288, 384)]:
        style = RenderStyle(dpi=dpi)
        assert (style.height_px, style.width_px) == (h, w)


def test_dpi10_tensor_is_9216_bytes():
    s = log_series([(0.0, 1.0, 0.0, 1.0), (1.0, 1.0, 0.0, 0.0)])
    t = render(s, 0, 1)
    assert len(t) == 9216
    assert t.data.shape == (3, 48, 64)
    assert len(t.tobytes()) == 9216


def test_render_is_deterministic():
    s = log_series([(0.0, 1.0, 0.0, 1.0), (1.0, 1.2, 0.5, 0.6), (0.6, 0.9, 0.1, 0.2)])
    assert render(s, 0, 2).tobytes() == render(s, 0, 2).tobytes()


def test_at_most_three_colors():
    cfg = SyntheticConfig(n_bars=120, seg_min=30, seg_max=60)
    series, _, _ = generate_stock("SYN000", 21, cfg)
    t = render(to_log(series), 10, 80)
    colors = {tuple(px) for px in t.data.reshape(3, -1).T}
    assert colors <= {WHITE, GREEN, RED}


# ---------------------------------------------------------------------------
# hand-computed pixel oracle


def test_two_bar_geometry_by_hand():
    # bar0 rises 0->1 (green), bar1 falls 1->0 (red); range [0,1], 2% pad
    s = log_series([(0.0, 1.0, 0.0, 1.0), (1.0, 1.0, 0.0, 0.0)])
    t = render(s, 0, 1)
    # rows: frac(1.0) = 0.02/1.04 -> row 1; frac(0.0) -> row 46
    # bodies: n=2, body_w = 64//2 - 1 = 31 -> bar0 cols 0..30, bar1 cols 32..62
    for y in range(48):
        for x in (0, 15, 30):
            expect = GREEN if 1 <= y <= 46 else WHITE
            assert pixel(t, y, x) == expect
        for x in (32, 47, 62):
            expect = RED if 1 <= y <= 46 else WHITE
            assert pixel(t, y, x) == expect
        for x in (31, 63):
            assert pixel(t, y, x) == WHITE


def test_wick_sticks_out_of_body():
    # open=close=0.5 mid, wick spans [0,1]: body is a 1-px line, wick full
    s = log_series([(0.5, 1.0, 0.0, 0.5), (0.5, 1.0, 0.0, 0.5)])
    t = render(s, 0, 1)
    mid_row = int(np.floor(round((1.02 - 0.5) / 1.04 * 47, 9) + 0.5))
    wick_x = 15  # centered in cols 0..30
    assert pixel(t, 1, wick_x) == GREEN  # wick top
    assert pixel(t, 46, wick_x) == GREEN  # wick bottom
    assert pixel(t, mid_row, 0) == GREEN  # body line full width
    assert pixel(t, mid_row, 30) == GREEN
    assert pixel(t, 1, 0) == WHITE  # off-wick column only has the body row


def test_down_color_on_equal_open_close_is_up():
    # close == open counts as up by definition
    s = log_series([(0.5, 1.0, 0.0, 0.5), (0.5, 1.0, 0.0, 0.5)])
    t = render(s, 0, 1)
    assert GREEN in {pixel(t, y, 15) for y in range(48)}
    assert RED not in {tuple(px) for px in t.data.reshape(3, -1).T}


def test_mirror_of_symmetric_input_is_invariant():
    bars = [(0.3, 0.8, 0.1, 0.6), (0.3, 0.8, 0.1, 0.6)]
    t1 = render(log_series(bars), 0, 1)
    t2 = render(log_series(list(reversed(bars))), 0, 1)
    assert t1.tobytes() == t2.tobytes()


# ---------------------------------------------------------------------------
# invariances


def test_translation_invariance_single_bar_pair():
    bars = [(0.1, 0.9, 0.05, 0.8), (0.8, 1.4, 0.7, 1.3)]
    shifted = [(o + 3.7, h + 3.7, l + 3.7, c + 3.7) for o, h, l, c in bars]
    assert render(log_series(bars), 0, 1).tobytes() == render(log_series(shifted), 0, 1).tobytes()


def test_translation_invariance_randomized(rng):
    cfg = SyntheticConfig(n_bars=200, seg_min=30, seg_max=80)
    series, _, _ = generate_stock("SYN000", 33, cfg)
    base = to_log(series)
    for _ in range(25):
        start = int(rng.integers(0, 150))
        end = start + int(rng.integers(2, 40))
        c = float(rng.uniform(-5, 5))
        shifted = OhlcSeries(
            stock_id=base.stock_id,
            bars=tuple(
                OhlcBar(b.date, b.open + c, b.high + c, b.low + c, b.close + c)
                for b in base.bars
            ),
            scale=PriceScale.NATURAL_LOG,
        )
        assert render(base, start, end).tobytes() == render(shifted, start, end).tobytes()


def test_degenerate_range_draws_midline():
    s = log_series([(0.5, 0.5, 0.5, 0.5)] * 3)
    t = render(s, 0, 2)
    assert all(pixel(t, 24, x) == GREEN for x in range(64))
    others = {pixel(t, y, x) for y in range(48) if y != 24 for x in range(0, 64, 7)}
    assert others == {WHITE}


# ---------------------------------------------------------------------------
# errors


def test_slice_validation():
    s = log_series([(0.0, 1.0, 0.0, 1.0)] * 5)
    with pytest.raises(ValueError, match="out of range"):
        render(s, 0, 5)
    with pytest.raises(ValueError, match="out of range"):
        render(s, -1, 3)
    with pytest.raises(ValueError, match="at least 2"):
        render(s, 2, 2)


def test_raw_series_rejected():
    s = make_series([10.0, 11.0, 10.5], spread=0.1)
    with pytest.raises(ValueError, match="log-scaled"):
        render(s, 0, 2)


def test_style_validation():
    with pytest.raises(ValueError):
        RenderStyle(dpi=0)
    with pytest.raises(ValueError):
        RenderStyle(up_color=(0, 255, 0), down_color=(0, 255, 0))
    with pytest.raises(ValueError):
        RenderStyle(background=(0, 255, 0))
    with pytest.raises(ValueError):
        RenderStyle(wick_width_px=0)


# ---------------------------------------------------------------------------
# binary quantization


def test_binary_fixed_point_and_threshold():
    zero = PixelTensor(np.zeros((3, 2, 2), dtype=np.uint8))
    assert render_binary(zero).tobytes() == zero.tobytes()
    t = PixelTensor(np.array([127, 128, 0, 255] * 3, dtype=np.uint8).reshape(3, 2, 2))
    out = render_binary(t).data
    assert out.reshape(-1)[:4].tolist() == [0, 255, 0, 255]


def test_binary_idempotent_on_random(rng):
    for _ in range(20):
        t = PixelTensor(rng.integers(0, 256, size=(3, 6, 9), dtype=np.uint8))
        once = render_binary(t)
        assert render_binary(once).tobytes() == once.tobytes()


# ---------------------------------------------------------------------------
# PPM debug export


def test_ppm_round_trip(tmp_path):
    s = log_series([(0.0, 1.0, 0.0, 1.0), (1.0, 1.2, 0.5, 0.6)])
    t = render(s, 0, 1)
    path = tmp_path / "img.ppm"
    write_ppm(t, path)
    back = read_ppm(path)
    assert back.tobytes() == t.tobytes()
    header = path.read_bytes()[:15]
    assert header.startswith(b"P6\n64 48\n255\n")


# ---------------------------------------------------------------------------
# golden files


def golden_cases():
    """Five deterministic reference renders; inputs derive only from seeds."""
    cfg = SyntheticConfig(n_bars=400, seg_min=40, seg_max=120)
    s1 = to_log(generate_stock("GOLD1", 101, cfg)[0])
    s2 = to_log(generate_stock("GOLD2", 202, cfg)[0])
    return [
        ("slice_25d", render(s1, 0, 24)),
        ("slice_75d", render(s1, 100, 174)),
        ("slice_2d", render(s2, 10, 11)),
        ("slice_dpi20", render(s2, 50, 99, RenderStyle(dpi=20))),
        ("slice_long_window", render(s2, 0, 399)),
    ]


@pytest.mark.parametrize("name", ["slice_25d", "slice_75d", "slice_2d", "slice_dpi20", "slice_long_window"])
def test_golden_byte_equality(name):
    tensors = dict(golden_cases())
    path = GOLDEN_DIR / f"{name}.ppm"
    assert path.is_file(), f"golden file {path} missing; run python3 tests/test_raster.py"
    assert read_ppm(path).tobytes() == tensors[name].tobytes()


if __name__ == "__main__":
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, tensor in golden_cases():
        write_ppm(tensor, GOLDEN_DIR / f"{name}.ppm")
        print(f"wrote {GOLDEN_DIR / f'{name}.ppm'}")
