"""Daily OHLC series: CSV round trip, log scale, date splits.

Every pipeline stage downstream consumes OhlcSeries, so this is the
natural place to start. Run from anywhere after `pip install -e .`.
"""
import datetime as dt
import io

from trendlab.marketdata import (
    parse_ohlc_csv,
    serialize_ohlc_csv,
    split_by_date,
    to_log,
)

CSV = """\
Date,Open,High,Low,Close
2015-01-05,100.0,103.5,99.2,102.8
2015-01-06,102.8,104.1,101.0,101.5
2015-01-07,101.5,102.2,97.8,98.4
2015-01-08,98.4,101.9,98.0,101.6
2015-01-09,101.6,105.0,101.3,104.9
"""

series = parse_ohlc_csv(io.StringIO(CSV), stock_id="DEMO")
print(f"parsed {len(series)} bars for {series.stock_id} on scale {series.scale.value}")
for bar in series.bars[:2]:
    print(f"  {bar.date}  O={bar.open:<6} H={bar.high:<6} L={bar.low:<6} C={bar.close}")

# the canonical form round-trips structurally: parse(serialize(s)) == s
text = serialize_ohlc_csv(series)
assert parse_ohlc_csv(io.StringIO(text), stock_id="DEMO") == series
print("parse(serialize(series)) gives the series back; canonical CSV starts:")
print("  " + "\n  ".join(text.splitlines()[:3]))

# models consume natural-log prices; the transform tags the scale
logged = to_log(series)
print(f"\nlog scale: first close {series.bars[0].close} -> {logged.bars[0].close:.6f}")

# split for train/test hygiene: threshold day goes to the right side
left, right = split_by_date(logged, dt.date(2015, 1, 7))
print(f"split at 2015-01-07: {len(left)} bars before, {len(right)} bars from that day on")
