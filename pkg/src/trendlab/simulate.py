"""Day-by-day trading simulation driven by the three models.

At each evaluation bar the detector looks at the trailing n_days slice; if
it fires, the locator re-anchors the current trend window start.  The
classifier then reads the window from that start to today and emits a
signal: +1 long, -1 short, 0 flat.  Position changes execute at the close
of the signal day; P&L accrues in log-return percentage points so daily
contributions are additive and buy-and-hold telescopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .labels import ContradictionPolicy, LabelState, LabelWindow, resolve
from .marketdata import OhlcSeries, PriceScale, to_log
from .models import (
    SliceSpec,
    predict_classifier,
    predict_detector,
    predict_locator,
)
from .nn import Network
from .raster import RenderStyle, render

__all__ = [
    "Position",
    "SimState",
    "TradePolicy",
    "TradeDay",
    "ModelBundle",
    "SimulationReport",
    "step",
    "apply_policy",
    "run_simulation",
    "run_scripted",
    "baseline_buy_and_hold",
    "baseline_expert",
    "contingency",
    "signals_from_labels",
]


class Position(str, Enum):
    LONG = "long"
    SHORT = "short"
    NONE = "none"


@dataclass(frozen=True)
class SimState:
    win_srt: int = 0
    position: Position = Position.NONE
    entry_idx: int | None = None

    def __post_init__(self):
        if (self.position is Position.NONE) != (self.entry_idx is None):
            raise ValueError("entry_idx must be set exactly when a position is open")


@dataclass(frozen=True)
class TradePolicy:
    allow_short: bool = True
    flat_ignored: bool = False


@dataclass(frozen=True)
class TradeDay:
    index: int
    signal: int
    position: Position
    contribution: float


@dataclass(frozen=True)
class ModelBundle:
    detector: Network
    locator: Network
    classifier: Network
    style: RenderStyle = RenderStyle()
    normalize: bool = False
    threshold: float = 0.5

    def features(self, series_log: OhlcSeries, start: int, end: int) -> np.ndarray:
        tensor = render(series_log, start, end, self.style)
        return tensor.to_float(self.normalize)[None]


@dataclass(frozen=True)
class SimulationReport:
    profit_pct: float
    days_in: int
    times_in: int
    data_points: int
    day_profit_pct: float | None
    year_profit_pct: float | None
    year_profit_avg_pct: float | None
    anomalies: int
    per_stock: dict[str, dict]
    contingency: list[list[int]] | None = None

    def to_json(self) -> dict:
        return {
            "profit_pct": self.profit_pct,
            "days_in": self.days_in,
            "times_in": self.times_in,
            "data_points": self.data_points,
            "day_profit_pct": self.day_profit_pct,
            "year_profit_pct": self.year_profit_pct,
            "year_profit_avg_pct": self.year_profit_avg_pct,
            "anomalies": self.anomalies,
            "per_stock": self.per_stock,
            "contingency": self.contingency,
        }


def step(
    state: SimState,
    t: int,
    series_log: OhlcSeries,
    bundle: ModelBundle,
    spec: SliceSpec,
) -> tuple[SimState, int | None]:
    """One model evaluation at bar t.  Returns the new state and the signal,
    or None when the inferred trend window collapsed to a single bar (the
    caller keeps its previous signal and counts the anomaly).  Uses no bar
    beyond t."""
    if t < spec.n_days - 1:
        raise ValueError(f"bar {t} has no full {spec.n_days}-day slice behind it")
    s0 = t - spec.n_days + 1
    feats = bundle.features(series_log, s0, t)
    prob = predict_detector(bundle.detector, feats)[0]
    win_srt = state.win_srt
    if prob >= bundle.threshold:
        pos = predict_locator(bundle.locator, feats)[0]
        win_srt = s0 + int(np.floor(pos * (spec.n_days - 1) + 0.5))
    state = replace(state, win_srt=win_srt)
    if win_srt >= t:
        return state, None
    probs = predict_classifier(bundle.classifier, bundle.features(series_log, win_srt, t))[0]
    return state, int(np.argmax(probs)) - 1


def apply_policy(signal: int, position: Position, policy: TradePolicy) -> Position:
    if signal == 1:
        return Position.LONG
    if signal == -1:
        return Position.SHORT if policy.allow_short else Position.NONE
    if signal == 0:
        return position if policy.flat_ignored else Position.NONE
    raise ValueError(f"signal must be -1, 0 or +1, got {signal}")


def _range_indices(
    series: OhlcSeries, date_range: tuple[date | None, date | None]
) -> tuple[int, int]:
    lo_date, hi_date = date_range
    lo = series.index_of_date(lo_date) if lo_date else 0
    hi = len(series) - 1
    if hi_date is not None:
        while hi >= 0 and series.bars[hi].date > hi_date:
            hi -= 1
    if lo > hi:
        raise ValueError(f"{series.stock_id}: empty date range")
    return lo, hi


def _account(
    series: OhlcSeries,
    lo: int,
    hi: int,
    signal_at: Callable[[int], int | None],
    policy: TradePolicy,
) -> tuple[dict, list[TradeDay]]:
    """Shared accounting loop.  signal_at(t) returns the signal decided at
    the close of bar t, or None for "no decision, keep the previous one".
    Contributions for day t accrue to the position held since the close of
    t-1; the day-t signal takes effect afterwards."""
    log_closes = np.log(series.closes()) if series.scale is PriceScale.RAW else series.closes()
    position = Position.NONE
    last_signal = 0
    profit = 0.0
    days_in = 0
    times_in = 0
    anomalies = 0
    log: list[TradeDay] = []
    for t in range(lo, hi + 1):
        contribution = 0.0
        if t > lo and position is not Position.NONE:
            sign = 1.0 if position is Position.LONG else -1.0
            contribution = sign * (log_closes[t] - log_closes[t - 1]) * 100.0
            profit += contribution
            days_in += 1
        decided = signal_at(t)
        if decided is None:
            anomalies += 1
            decided = last_signal
        last_signal = decided
        new_position = apply_policy(decided, position, policy)
        if new_position is not position and new_position is not Position.NONE:
            times_in += 1
        position = new_position
        log.append(TradeDay(t, decided, position, contribution))
    stats = {
        "profit_pct": profit,
        "days_in": days_in,
        "times_in": times_in,
        "data_points": hi - lo + 1,
        "anomalies": anomalies,
    }
    return stats, log


def _assemble(
    per_stock: dict[str, dict], contingency_table: list[list[int]] | None = None
) -> SimulationReport:
    profit = sum(s["profit_pct"] for s in per_stock.values())
    days_in = sum(s["days_in"] for s in per_stock.values())
    times_in = sum(s["times_in"] for s in per_stock.values())
    data_points = sum(s["data_points"] for s in per_stock.values())
    anomalies = sum(s["anomalies"] for s in per_stock.values())
    day_profit = profit / days_in if days_in else None
    return SimulationReport(
        profit_pct=profit,
        days_in=days_in,
        times_in=times_in,
        data_points=data_points,
        day_profit_pct=day_profit,
        year_profit_pct=day_profit * 250.0 if day_profit is not None else None,
        year_profit_avg_pct=profit / data_points * 250.0 if data_points else None,
        anomalies=anomalies,
        per_stock=per_stock,
        contingency=contingency_table,
    )


def run_simulation(
    stocks: Sequence[OhlcSeries],
    models: ModelBundle,
    spec: SliceSpec = SliceSpec(),
    policy: TradePolicy = TradePolicy(),
    date_range: tuple[date | None, date | None] = (None, None),
    labels: Sequence[LabelWindow] | None = None,
) -> tuple[SimulationReport, dict[str, list[TradeDay]]]:
    """Simulate the model-driven strategy over every stock.

    Models are evaluated every spec.skip-th bar once a full slice is
    available; between evaluations the last signal is held.  When labels
    are provided, the report carries a day-level signal-vs-truth
    contingency table."""
    if not stocks:
        raise ValueError("no stocks to simulate")
    per_stock: dict[str, dict] = {}
    logs: dict[str, list[TradeDay]] = {}
    for series in stocks:
        series_log = series if series.scale is PriceScale.NATURAL_LOG else to_log(series)
        lo, hi = _range_indices(series, date_range)
        first_eval = max(lo, spec.n_days - 1)
        stats, log = _account_with_cadence(
            series, series_log, lo, hi, first_eval, spec, models, policy
        )
        per_stock[series.stock_id] = stats
        logs[series.stock_id] = log
    table = contingency(logs, labels) if labels is not None else None
    return _assemble(per_stock, table), logs


def _account_with_cadence(
    series: OhlcSeries,
    series_log: OhlcSeries,
    lo: int,
    hi: int,
    first_eval: int,
    spec: SliceSpec,
    models: ModelBundle,
    policy: TradePolicy,
) -> tuple[dict, list[TradeDay]]:
    state = SimState()
    last_signal = 0

    def signal_at(t: int) -> int | None:
        nonlocal state, last_signal
        if t < first_eval or (t - first_eval) % spec.skip != 0:
            return last_signal
        state, sig = step(state, t, series_log, models, spec)
        if sig is None:
            return None  # anomaly: accounting keeps the previous signal
        last_signal = sig
        return sig

    return _account(series, lo, hi, signal_at, policy)


def run_scripted(
    stocks: Sequence[OhlcSeries],
    signal_fn: Callable[[OhlcSeries, int], int],
    policy: TradePolicy = TradePolicy(),
    date_range: tuple[date | None, date | None] = (None, None),
    labels: Sequence[LabelWindow] | None = None,
) -> tuple[SimulationReport, dict[str, list[TradeDay]]]:
    """Same accounting as run_simulation, but signals come from a function
    of (series, bar index), evaluated at every bar.  This is the harness for
    oracle tests and label-driven baselines."""
    if not stocks:
        raise ValueError("no stocks to simulate")
    per_stock: dict[str, dict] = {}
    logs: dict[str, list[TradeDay]] = {}
    for series in stocks:
        lo, hi = _range_indices(series, date_range)
        stats, log = _account(series, lo, hi, lambda t: signal_fn(series, t), policy)
        per_stock[series.stock_id] = stats
        logs[series.stock_id] = log
    table = contingency(logs, labels) if labels is not None else None
    return _assemble(per_stock, table), logs


def baseline_buy_and_hold(
    stocks: Sequence[OhlcSeries],
    date_range: tuple[date | None, date | None] = (None, None),
) -> SimulationReport:
    """Long from the first to the last bar of every stock.  By convention
    days_in counts every data point, which makes the two annualized profit
    figures coincide and times_in equal the stock count."""
    if not stocks:
        raise ValueError("no stocks to simulate")
    per_stock: dict[str, dict] = {}
    for series in stocks:
        lo, hi = _range_indices(series, date_range)
        closes = series.closes()
        if series.scale is PriceScale.RAW:
            profit = float(np.log(closes[hi]) - np.log(closes[lo])) * 100.0
        else:
            profit = float(closes[hi] - closes[lo]) * 100.0
        per_stock[series.stock_id] = {
            "profit_pct": profit,
            "days_in": hi - lo + 1,
            "times_in": 1,
            "data_points": hi - lo + 1,
            "anomalies": 0,
        }
    return _assemble(per_stock)


def signals_from_labels(
    windows: Sequence[LabelWindow],
) -> dict[str, dict[int, int]]:
    """Per-stock bar->signal maps: trend up +1, trend down -1, flat 0;
    Unknown and unlabeled bars have no entry (treated as 0 by callers)."""
    out: dict[str, dict[int, int]] = {}
    value = {
        LabelState.TREND_UP: 1,
        LabelState.TREND_DOWN: -1,
        LabelState.FLAT: 0,
    }
    for w in windows:
        if w.state is LabelState.UNKNOWN:
            continue
        per = out.setdefault(w.stock_id, {})
        for i in range(w.start_idx, w.end_idx + 1):
            per[i] = value[w.state]
    return out


def baseline_expert(
    stocks: Sequence[OhlcSeries],
    labels: Sequence[LabelWindow],
    policy: TradePolicy = TradePolicy(),
    date_range: tuple[date | None, date | None] = (None, None),
    resolve_policy: ContradictionPolicy = ContradictionPolicy(),
) -> dict[str, SimulationReport]:
    """One report per expert (or resolved layer), signalling straight from
    that expert's windows at daily cadence."""
    resolved = resolve(list(labels), resolve_policy)
    if not resolved:
        raise ValueError("no labels in range")
    experts = sorted({w.expert_id for w in resolved})
    reports: dict[str, SimulationReport] = {}
    for expert in experts:
        maps = signals_from_labels([w for w in resolved if w.expert_id == expert])
        report, _ = run_scripted(
            stocks,
            lambda series, t: maps.get(series.stock_id, {}).get(t, 0),
            policy,
            date_range,
        )
        reports[expert] = report
    return reports


def contingency(
    trade_logs: dict[str, list[TradeDay]],
    labels: Sequence[LabelWindow] | None,
) -> list[list[int]]:
    """3x3 day-count matrix: rows = true state (down, flat, up), columns =
    emitted signal (down, flat, up).  Days whose truth is Unknown,
    unlabeled, or contested between experts are skipped."""
    if labels is None:
        raise ValueError("contingency needs labels")
    truth: dict[str, dict[int, int]] = {}
    contested: dict[str, set[int]] = {}
    value = {
        LabelState.TREND_DOWN: 0,
        LabelState.FLAT: 1,
        LabelState.TREND_UP: 2,
    }
    for w in labels:
        if w.state is LabelState.UNKNOWN:
            continue
        per = truth.setdefault(w.stock_id, {})
        bad = contested.setdefault(w.stock_id, set())
        for i in range(w.start_idx, w.end_idx + 1):
            if i in per and per[i] != value[w.state]:
                bad.add(i)
            per[i] = value[w.state]
    table = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for stock_id, log in trade_logs.items():
        per = truth.get(stock_id, {})
        bad = contested.get(stock_id, set())
        for day in log:
            if day.index not in per or day.index in bad:
                continue
            table[per[day.index]][day.signal + 1] += 1
    return table
