import datetime as dt

import numpy as np
import pytest

from trendlab.labels import LabelState, derive_changepoints, validate_windows
from trendlab.marketdata import PriceScale
from trendlab.synthetic import (
    SyntheticConfig,
    generate_stock,
    jitter_boundaries,
    make_universe,
)

CFG = SyntheticConfig(n_bars=600, seg_min=40, seg_max=150)


def test_series_shape_and_validity():
    series, windows, boundaries = generate_stock("SYN000", 7, CFG)
    assert len(series) == 600
    assert series.scale is PriceScale.RAW
    validate_windows(windows, series_len=600)
    # windows tile the series exactly
    assert windows[0].start_idx == 0
    assert windows[-1].end_idx == 599
    for a, b in zip(windows, windows[1:]):
        assert b.start_idx == a.end_idx + 1


def test_consecutive_segments_never_repeat_state():
    _, windows, _ = generate_stock("SYN000", 7, CFG)
    for a, b in zip(windows, windows[1:]):
        assert a.state != b.state


def test_boundaries_equal_derived_changepoints():
    _, windows, boundaries = generate_stock("SYN000", 7, CFG)
    assert tuple(boundaries) == derive_changepoints(windows).indices


def test_open_is_previous_close():
    series, _, _ = generate_stock("SYN000", 7, CFG)
    for prev, cur in zip(series.bars, series.bars[1:]):
        assert cur.open == prev.close


def test_dates_are_business_days():
    series, _, _ = generate_stock("SYN000", 7, CFG)
    for b in series.bars:
        assert b.date.weekday() < 5
    assert series.bars[0].date >= CFG.start_date


def test_determinism_per_seed():
    a = generate_stock("SYN000", 11, CFG)
    b = generate_stock("SYN000", 11, CFG)
    c = generate_stock("SYN000", 12, CFG)
    assert a[0] == b[0] and a[1] == b[1]
    assert a[0] != c[0]


def test_drift_shows_in_realized_returns():
    cfg = SyntheticConfig(n_bars=2000, seg_min=100, seg_max=300)
    series, windows, _ = generate_stock("SYN000", 3, cfg)
    lc = np.log(series.closes())
    by_state = {s: [] for s in (LabelState.TREND_UP, LabelState.TREND_DOWN, LabelState.FLAT)}
    for w in windows:
        if len(w) < 5:
            continue
        by_state[w.state].append((lc[w.end_idx] - lc[w.start_idx]) / (len(w) - 1))
    means = {s: np.mean(v) for s, v in by_state.items() if v}
    if LabelState.TREND_UP in means and LabelState.TREND_DOWN in means:
        assert means[LabelState.TREND_UP] > means[LabelState.TREND_DOWN]


def test_universe_stocks_differ_but_reproduce():
    u1 = make_universe(4, 99, CFG)
    u2 = make_universe(4, 99, CFG)
    assert [s.stock_id for s, _, _ in u1] == ["SYN000", "SYN001", "SYN002", "SYN003"]
    assert all(a[0] == b[0] for a, b in zip(u1, u2))
    closes = [tuple(s.closes()) for s, _, _ in u1]
    assert len(set(closes)) == 4


def test_universe_prefix_and_validation():
    u = make_universe(2, 1, CFG, prefix="QQ")
    assert u[0][0].stock_id == "QQ000"
    with pytest.raises(ValueError):
        make_universe(0, 1, CFG)


def test_jitter_keeps_states_and_extent(rng):
    _, windows, _ = generate_stock("SYN000", 5, CFG)
    moved = jitter_boundaries(windows, "noisy", rng, max_shift=3)
    validate_windows(moved)
    assert [w.state for w in moved] == [w.state for w in windows]
    assert moved[0].start_idx == windows[0].start_idx
    assert moved[-1].end_idx == windows[-1].end_idx
    assert all(w.expert_id == "noisy" for w in moved)
    for orig, new in zip(windows, moved):
        assert abs(new.start_idx - orig.start_idx) <= 3


def test_jitter_windows_stay_adjacent(rng):
    _, windows, _ = generate_stock("SYN000", 5, CFG)
    moved = jitter_boundaries(windows, "noisy", rng)
    for a, b in zip(moved, moved[1:]):
        assert b.start_idx == a.end_idx + 1
        assert len(a) >= 2


def test_config_validation():
    with pytest.raises(ValueError):
        SyntheticConfig(n_bars=1)
    with pytest.raises(ValueError):
        SyntheticConfig(seg_min=10, seg_max=5)
    with pytest.raises(ValueError):
        SyntheticConfig(base_price=-1.0)
