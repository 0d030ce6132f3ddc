"""Synthetic stocks with known trend structure.

Each stock is a piecewise log-price walk: the series is cut into segments of
40 to 600 business days, each segment gets a state (up, down or flat) that
never repeats the previous one, and the walk drifts according to that state.
The segment list doubles as perfect expert markup, so every derived quantity
(changepoints, slice labels, trend directions) has a known answer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date

import numpy as np

from .labels import LabelState, LabelWindow, validate_windows
from .marketdata import OhlcBar, OhlcSeries, PriceScale

__all__ = [
    "SyntheticConfig",
    "generate_stock",
    "make_universe",
    "jitter_boundaries",
]

_TREND_STATES = (LabelState.TREND_UP, LabelState.TREND_DOWN, LabelState.FLAT)


@dataclass(frozen=True)
class SyntheticConfig:
    n_bars: int = 2500
    start_date: date = date(2005, 1, 3)
    seg_min: int = 40
    seg_max: int = 600
    drift_up: float = 0.0035
    drift_down: float = -0.0035
    drift_flat: float = 0.0
    sigma: float = 0.01
    spread: float = 0.004
    base_price: float = 100.0
    allow_flat: bool = True

    def __post_init__(self):
        if self.n_bars < 2:
            raise ValueError("n_bars must be >= 2")
        if not 2 <= self.seg_min <= self.seg_max:
            raise ValueError("need 2 <= seg_min <= seg_max")
        if self.sigma < 0 or self.spread < 0:
            raise ValueError("sigma and spread must be non-negative")
        if self.base_price <= 0:
            raise ValueError("base_price must be positive")

    def _drift(self, state: LabelState) -> float:
        return {
            LabelState.TREND_UP: self.drift_up,
            LabelState.TREND_DOWN: self.drift_down,
            LabelState.FLAT: self.drift_flat,
        }[state]


def _draw_segments(
    rng: np.random.Generator, cfg: SyntheticConfig
) -> list[tuple[int, LabelState]]:
    """(length, state) pairs covering exactly n_bars, no repeated states."""
    states = _TREND_STATES if cfg.allow_flat else _TREND_STATES[:2]
    segments: list[tuple[int, LabelState]] = []
    total = 0
    prev: LabelState | None = None
    while total < cfg.n_bars:
        choices = [s for s in states if s != prev]
        state = choices[int(rng.integers(len(choices)))]
        length = int(rng.integers(cfg.seg_min, cfg.seg_max + 1))
        length = min(length, cfg.n_bars - total)
        segments.append((length, state))
        total += length
        prev = state
    if segments[-1][0] < 2 and len(segments) > 1:
        # a 1-bar tail cannot carry a trend; fold it into its predecessor
        tail = segments.pop()
        length, state = segments.pop()
        segments.append((length + tail[0], state))
    return segments


def _business_days(start: date, n: int) -> list[date]:
    start64 = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(start64, np.arange(n))
    return [d.astype(date) for d in days.astype("datetime64[D]")]


def generate_stock(
    stock_id: str,
    seed: int | np.random.SeedSequence | np.random.Generator,
    cfg: SyntheticConfig = SyntheticConfig(),
) -> tuple[OhlcSeries, list[LabelWindow], list[int]]:
    """Build one stock.

    Returns the series, the expert windows (expert id ``"oracle"``), and the
    segment boundary indices, i.e. the bar index where each new segment
    starts.  Because consecutive segments never share a state, these are
    exactly the changepoints of the markup.
    """
    rng = (
        seed
        if isinstance(seed, np.random.Generator)
        else np.random.default_rng(seed)
    )
    segments = _draw_segments(rng, cfg)

    state_per_bar: list[LabelState] = []
    for length, state in segments:
        state_per_bar.extend([state] * length)

    n = cfg.n_bars
    steps = rng.standard_normal(n) * cfg.sigma
    lc = np.empty(n)
    lc[0] = np.log(cfg.base_price) + steps[0]
    for t in range(1, n):
        lc[t] = lc[t - 1] + cfg._drift(state_per_bar[t]) + steps[t]

    lo_ = np.empty(n)
    lo_[0] = np.log(cfg.base_price)
    lo_[1:] = lc[:-1]
    spread_hi = np.abs(rng.standard_normal(n)) * cfg.spread
    spread_lo = np.abs(rng.standard_normal(n)) * cfg.spread
    lh = np.maximum(lo_, lc) + spread_hi
    ll = np.minimum(lo_, lc) - spread_lo

    o = np.round(np.exp(lo_), 4)
    h = np.round(np.exp(lh), 4)
    l = np.round(np.exp(ll), 4)
    c = np.round(np.exp(lc), 4)
    dates = _business_days(cfg.start_date, n)
    bars = tuple(
        OhlcBar(dates[t], float(o[t]), float(h[t]), float(l[t]), float(c[t]))
        for t in range(n)
    )
    series = OhlcSeries(stock_id=stock_id, bars=bars, scale=PriceScale.RAW)

    windows: list[LabelWindow] = []
    boundaries: list[int] = []
    pos = 0
    for length, state in segments:
        windows.append(LabelWindow(stock_id, "oracle", pos, pos + length - 1, state))
        if pos > 0:
            boundaries.append(pos)
        pos += length
    validate_windows(windows, series_len=n)
    return series, windows, boundaries


def make_universe(
    n_stocks: int,
    seed: int,
    cfg: SyntheticConfig = SyntheticConfig(),
    prefix: str = "SYN",
) -> list[tuple[OhlcSeries, list[LabelWindow], list[int]]]:
    """Independent stocks from one master seed, reproducible as a set."""
    if n_stocks < 1:
        raise ValueError("n_stocks must be >= 1")
    children = np.random.SeedSequence(seed).spawn(n_stocks)
    return [
        generate_stock(f"{prefix}{i:03d}", np.random.default_rng(children[i]), cfg)
        for i in range(n_stocks)
    ]


def jitter_boundaries(
    windows: list[LabelWindow],
    expert_id: str,
    rng: np.random.Generator,
    max_shift: int = 3,
) -> list[LabelWindow]:
    """A second opinion: the same markup with internal boundaries nudged by
    up to max_shift bars.  States and outer extent are untouched."""
    ordered = sorted(windows, key=lambda w: w.start_idx)
    starts = [w.start_idx for w in ordered]
    ends = [w.end_idx for w in ordered]
    for k in range(1, len(ordered)):
        if starts[k] != ends[k - 1] + 1:
            continue  # only adjacent boundaries move; gaps stay gaps
        shift = int(rng.integers(-max_shift, max_shift + 1))
        b = starts[k] + shift
        # keep both neighbours at least 2 bars long
        b = max(b, starts[k - 1] + 2)
        b = min(b, ends[k] - 1)
        starts[k] = b
        ends[k - 1] = b - 1
    return [
        replace(w, expert_id=expert_id, start_idx=s, end_idx=e)
        for w, s, e in zip(ordered, starts, ends)
    ]
