import datetime as dt

import numpy as np
import pytest

from trendlab.marketdata import OhlcBar, OhlcSeries, PriceScale


def business_days(start: dt.date, n: int) -> list[dt.date]:
    start64 = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return [d.astype(dt.date) for d in np.busday_offset(start64, np.arange(n)).astype("datetime64[D]")]


def make_series(
    closes,
    stock_id: str = "TEST",
    start: dt.date = dt.date(2010, 1, 4),
    spread: float = 0.0,
    scale: PriceScale = PriceScale.RAW,
) -> OhlcSeries:
    """Series where open_t = close_{t-1} and high/low hug the body by spread."""
    closes = [float(c) for c in closes]
    dates = business_days(start, len(closes))
    bars = []
    prev = closes[0]
    for d, c in zip(dates, closes):
        o = prev
        hi = max(o, c) + spread
        lo = min(o, c) - spread
        bars.append(OhlcBar(d, o, hi, lo, c))
        prev = c
    return OhlcSeries(stock_id=stock_id, bars=tuple(bars), scale=scale)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
