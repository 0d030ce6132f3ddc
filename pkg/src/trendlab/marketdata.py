"""Daily OHLC ingestion, log transform and train/test date split."""

from __future__ import annotations

import datetime as dt
import io
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "PriceScale",
    "OhlcBar",
    "OhlcSeries",
    "CsvFormatError",
    "parse_ohlc_csv",
    "serialize_ohlc_csv",
    "read_ohlc_csv",
    "write_ohlc_csv",
    "load_series_dir",
    "to_log",
    "split_by_date",
]

_HEADER = ("Date", "Open", "High", "Low", "Close")


class PriceScale(str, Enum):
    RAW = "raw"
    NATURAL_LOG = "natural_log"


class CsvFormatError(ValueError):
    """Malformed quote file; carries the 1-based row number when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


@dataclass(frozen=True)
class OhlcBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise ValueError(
                f"OHLC ordering violation at {self.date}: "
                f"o={self.open} h={self.high} l={self.low} c={self.close}"
            )

    def values(self) -> tuple[float, float, float, float]:
        return (self.open, self.high, self.low, self.close)


@dataclass(frozen=True)
class OhlcSeries:
    """Immutable per-stock daily bar sequence.

    Bars are indexed by position; all window arithmetic elsewhere is in
    business days, i.e. plain bar offsets.
    """

    stock_id: str
    bars: tuple[OhlcBar, ...]
    scale: PriceScale = PriceScale.RAW

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        for i in range(1, len(self.bars)):
            if self.bars[i].date <= self.bars[i - 1].date:
                raise ValueError(
                    f"{self.stock_id}: dates not strictly increasing at bar {i} "
                    f"({self.bars[i - 1].date} -> {self.bars[i].date})"
                )
        if self.scale == PriceScale.RAW:
            for i, b in enumerate(self.bars):
                if b.low <= 0:
                    raise ValueError(f"{self.stock_id}: nonpositive price at bar {i}")

    def __len__(self) -> int:
        return len(self.bars)

    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=np.float64)

    def opens(self) -> np.ndarray:
        return np.array([b.open for b in self.bars], dtype=np.float64)

    def highs(self) -> np.ndarray:
        return np.array([b.high for b in self.bars], dtype=np.float64)

    def lows(self) -> np.ndarray:
        return np.array([b.low for b in self.bars], dtype=np.float64)

    def index_of_date(self, threshold: dt.date) -> int:
        """First bar index whose date is >= threshold (== len if none)."""
        for i, b in enumerate(self.bars):
            if b.date >= threshold:
                return i
        return len(self.bars)


def _format_price(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def parse_ohlc_csv(text: str | io.TextIOBase, stock_id: str = "") -> OhlcSeries:
    """Parse `Date,Open,High,Low,Close[,Volume]` quotes into a raw series.

    The optional Volume column is accepted and discarded.  Rows must be in
    strictly increasing date order; the series is validated, never re-sorted.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = text.read().splitlines()
    if not lines:
        raise CsvFormatError("empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if tuple(header[:5]) != _HEADER or len(header) > 6 or (
        len(header) == 6 and header[5] != "Volume"
    ):
        raise CsvFormatError(f"bad header {lines[0]!r}", row=1)

    bars: list[OhlcBar] = []
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) not in (5, 6):
            raise CsvFormatError(f"expected 5 or 6 fields, got {len(fields)}", row=row_no)
        try:
            date = dt.date.fromisoformat(fields[0].strip())
            o, h, l, c = (float(f) for f in fields[1:5])
        except ValueError as exc:
            raise CsvFormatError(str(exc), row=row_no) from exc
        if min(o, h, l, c) <= 0:
            raise CsvFormatError("nonpositive price", row=row_no)
        try:
            bar = OhlcBar(date, o, h, l, c)
        except ValueError as exc:
            raise CsvFormatError(str(exc), row=row_no) from exc
        if bars and bar.date <= bars[-1].date:
            raise CsvFormatError(
                f"non-increasing date {bar.date} after {bars[-1].date}", row=row_no
            )
        bars.append(bar)
    return OhlcSeries(stock_id=stock_id, bars=tuple(bars), scale=PriceScale.RAW)


def serialize_ohlc_csv(series: OhlcSeries) -> str:
    """Canonical text form; parse(serialize(s)) reproduces s bit-exactly."""
    out = [",".join(_HEADER)]
    for b in series.bars:
        out.append(
            f"{b.date.isoformat()},{_format_price(b.open)},{_format_price(b.high)},"
            f"{_format_price(b.low)},{_format_price(b.close)}"
        )
    return "\n".join(out) + "\n"


def read_ohlc_csv(path: str | Path) -> OhlcSeries:
    """Parse a quote file; the stock id is the file name stem."""
    path = Path(path)
    return parse_ohlc_csv(path.read_text(encoding="utf-8"), stock_id=path.stem)


def write_ohlc_csv(series: OhlcSeries, path: str | Path) -> None:
    Path(path).write_text(serialize_ohlc_csv(series), encoding="utf-8")


def load_series_dir(directory: str | Path) -> dict[str, OhlcSeries]:
    """Parse every *.csv in a directory, keyed by stock id."""
    out: dict[str, OhlcSeries] = {}
    for path in sorted(Path(directory).glob("*.csv")):
        out[path.stem] = read_ohlc_csv(path)
    return out


def to_log(series: OhlcSeries) -> OhlcSeries:
    """Replace every O/H/L/C by its natural logarithm.

    ln is strictly monotone, so the per-bar ordering invariants survive.
    """
    if series.scale != PriceScale.RAW:
        raise ValueError(f"{series.stock_id}: series is already log-scaled")
    bars = tuple(
        OhlcBar(b.date, math.log(b.open), math.log(b.high), math.log(b.low), math.log(b.close))
        for b in series.bars
    )
    return OhlcSeries(stock_id=series.stock_id, bars=bars, scale=PriceScale.NATURAL_LOG)


def split_by_date(
    series: OhlcSeries, threshold: dt.date
) -> tuple[OhlcSeries, OhlcSeries]:
    """Partition into (bars before threshold, bars on/after threshold)."""
    cut = series.index_of_date(threshold)
    train = OhlcSeries(series.stock_id, series.bars[:cut], series.scale)
    test = OhlcSeries(series.stock_id, series.bars[cut:], series.scale)
    return train, test
