"""Expert label windows: changepoint derivation, per-slice labels, and
multi-expert duplicate/contradiction resolution."""

from __future__ import annotations

import json
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LabelState",
    "LabelWindow",
    "ChangepointSet",
    "ResolveMode",
    "ContradictionPolicy",
    "OverlapError",
    "validate_windows",
    "derive_changepoints",
    "changepoint_in_slice",
    "last_changepoint_position",
    "trend_direction",
    "resolve",
    "windows_to_doc",
    "doc_to_windows",
    "read_label_file",
    "write_label_file",
]


class LabelState(str, Enum):
    TREND_UP = "trend_up"
    TREND_DOWN = "trend_down"
    FLAT = "flat"
    UNKNOWN = "unknown"


class OverlapError(ValueError):
    """Two windows of one expert overlap; carries the offending index pairs."""

    def __init__(self, message: str, offending: list[tuple[int, int]]):
        self.offending = offending
        super().__init__(message)


@dataclass(frozen=True)
class LabelWindow:
    """One expert-marked interval, inclusive on both ends."""

    stock_id: str
    expert_id: str
    start_idx: int
    end_idx: int
    state: LabelState

    def __post_init__(self):
        if self.start_idx < 0 or self.end_idx < self.start_idx:
            raise ValueError(
                f"bad window bounds [{self.start_idx}, {self.end_idx}] "
                f"for {self.stock_id}/{self.expert_id}"
            )

    def __len__(self) -> int:
        return self.end_idx - self.start_idx + 1

    def contains(self, idx: int) -> bool:
        return self.start_idx <= idx <= self.end_idx


@dataclass(frozen=True)
class ChangepointSet:
    """Bar indices where the market state switches; an index i means the new
    window starts at bar i."""

    stock_id: str
    expert_id: str
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        for a, b in zip(self.indices, self.indices[1:]):
            if b <= a:
                raise ValueError("changepoint indices must be strictly increasing")


class ResolveMode(str, Enum):
    KEEP_ALL = "keep_all"
    DEDUP = "dedup"
    DEDUP_DROP_CONTRADICTIONS = "dedup_drop_contradictions"


@dataclass(frozen=True)
class ContradictionPolicy:
    mode: ResolveMode = ResolveMode.KEEP_ALL
    snap_tolerance_days: int = 0

    def __post_init__(self):
        if not 0 <= self.snap_tolerance_days <= 10:
            raise ValueError("snap_tolerance_days must be in 0..10")


def validate_windows(
    windows: Sequence[LabelWindow], series_len: int | None = None
) -> None:
    """Check the per-(stock, expert) invariants: ordered, non-overlapping,
    inside the series when its length is known."""
    groups: dict[tuple[str, str], list[LabelWindow]] = {}
    for w in windows:
        groups.setdefault((w.stock_id, w.expert_id), []).append(w)
    for (stock, expert), group in groups.items():
        ordered = sorted(group, key=lambda w: w.start_idx)
        for a, b in zip(ordered, ordered[1:]):
            if b.start_idx <= a.end_idx:
                raise OverlapError(
                    f"{stock}/{expert}: windows [{a.start_idx},{a.end_idx}] and "
                    f"[{b.start_idx},{b.end_idx}] overlap",
                    offending=[(a.start_idx, a.end_idx), (b.start_idx, b.end_idx)],
                )
        if series_len is not None and ordered and ordered[-1].end_idx >= series_len:
            raise ValueError(
                f"{stock}/{expert}: window end {ordered[-1].end_idx} outside series "
                f"of length {series_len}"
            )


def derive_changepoints(windows: Sequence[LabelWindow]) -> ChangepointSet:
    """Changepoints of a single expert's markup on a single stock.

    A changepoint sits at the start of a window whose immediate predecessor
    (adjacent, no gap) has a different state.  Unknown windows and unlabeled
    gaps break adjacency: a trend change into or out of unlabeled ground is
    never asserted.
    """
    if not windows:
        return ChangepointSet("", "", ())
    stocks = {w.stock_id for w in windows}
    experts = {w.expert_id for w in windows}
    if len(stocks) > 1 or len(experts) > 1:
        raise ValueError("derive_changepoints expects a single expert and stock")
    validate_windows(windows)
    ordered = sorted(windows, key=lambda w: w.start_idx)
    cps = []
    for a, b in zip(ordered, ordered[1:]):
        adjacent = b.start_idx == a.end_idx + 1
        if (
            adjacent
            and a.state != LabelState.UNKNOWN
            and b.state != LabelState.UNKNOWN
            and a.state != b.state
        ):
            cps.append(b.start_idx)
    return ChangepointSet(stocks.pop(), experts.pop(), tuple(cps))


def changepoint_in_slice(slice_start: int, n_days: int, cps: ChangepointSet) -> int:
    """1 iff any changepoint falls inside [slice_start, slice_start+n_days-1]."""
    if n_days < 2:
        raise ValueError("n_days must be >= 2")
    lo = bisect_left(cps.indices, slice_start)
    hi = bisect_right(cps.indices, slice_start + n_days - 1)
    return int(hi > lo)


def last_changepoint_position(slice_start: int, n_days: int, cps: ChangepointSet) -> float:
    """Position of the last changepoint in the slice as a fraction of its
    width: 0.0 at the first bar, 1.0 at the last."""
    if n_days < 2:
        raise ValueError("n_days must be >= 2")
    hi = bisect_right(cps.indices, slice_start + n_days - 1)
    lo = bisect_left(cps.indices, slice_start)
    if hi <= lo:
        raise ValueError(
            f"no changepoint inside slice [{slice_start}, {slice_start + n_days - 1}]"
        )
    last = cps.indices[hi - 1]
    return (last - slice_start) / (n_days - 1)


def ols_slope(values: Sequence[float] | np.ndarray) -> float:
    """Ordinary-least-squares slope of values against their index."""
    y = np.asarray(values, dtype=np.float64)
    n = y.size
    if n < 2:
        raise ValueError("need at least 2 points for a slope")
    x = np.arange(n, dtype=np.float64)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def trend_direction(window: LabelWindow, log_closes: Sequence[float] | np.ndarray) -> int:
    """Direction of a markup window: -1 down, 0 flat, +1 up.

    Flat windows are 0 by definition.  Trend windows take the sign of the
    OLS slope of log close price over the window; an exactly zero slope on a
    trend window is anomalous and reported as 0 with a warning.
    """
    if window.state == LabelState.UNKNOWN:
        raise ValueError("trend_direction is undefined for Unknown windows")
    if len(window) < 2:
        raise ValueError(f"window [{window.start_idx},{window.end_idx}] too short")
    if window.state == LabelState.FLAT:
        return 0
    closes = np.asarray(log_closes, dtype=np.float64)
    if window.end_idx >= closes.size:
        raise ValueError("window extends past the close series")
    slope = ols_slope(closes[window.start_idx : window.end_idx + 1])
    if slope == 0.0:
        warnings.warn(
            f"zero regression slope on trend window [{window.start_idx},{window.end_idx}]",
            RuntimeWarning,
        )
        return 0
    return 1 if slope > 0 else -1


# ---------------------------------------------------------------------------
# Multi-expert resolution


def _state_array(windows: list[LabelWindow], length: int) -> list[LabelState | None]:
    arr: list[LabelState | None] = [None] * length
    for w in windows:
        for i in range(w.start_idx, w.end_idx + 1):
            arr[i] = w.state
    return arr


def _runs_to_windows(
    arr: Sequence[LabelState | None], stock_id: str, expert_id: str
) -> list[LabelWindow]:
    out: list[LabelWindow] = []
    start = None
    for i in range(len(arr) + 1):
        cur = arr[i] if i < len(arr) else None
        if start is not None and (cur != arr[start]):
            out.append(LabelWindow(stock_id, expert_id, start, i - 1, arr[start]))
            start = None
        if cur is not None and start is None:
            start = i
    return out


def _boundaries(arr: Sequence[LabelState | None]) -> list[int]:
    """Indices where the labeled state switches between two covered bars."""
    out = []
    for i in range(1, len(arr)):
        if arr[i] is not None and arr[i - 1] is not None and arr[i] != arr[i - 1]:
            out.append(i)
    return out


def _snap_boundaries(
    per_expert: dict[str, list[LabelState | None]], tolerance: int
) -> None:
    """Blot correction: cross-expert boundaries within tolerance collapse to
    the earliest index of their cluster.  Mutates the state arrays."""
    if tolerance <= 0 or len(per_expert) < 2:
        return
    tagged = sorted(
        (idx, expert)
        for expert, arr in per_expert.items()
        for idx in _boundaries(arr)
    )
    clusters: list[list[tuple[int, str]]] = []
    for idx, expert in tagged:
        if clusters and idx - clusters[-1][0][0] <= tolerance:
            clusters[-1].append((idx, expert))
        else:
            clusters.append([(idx, expert)])
    for cluster in clusters:
        target = cluster[0][0]
        if len({e for _, e in cluster}) < 2:
            continue  # only one expert here: nothing to reconcile
        for idx, expert in cluster[1:]:
            if idx == target:
                continue
            arr = per_expert[expert]
            # moving a boundary left assigns the new window's state to the
            # bars in between; skip if another boundary sits in the way
            if any(j in range(target + 1, idx) for j in _boundaries(arr)):
                continue
            state = arr[idx]
            for j in range(target, idx):
                if arr[j] is not None:
                    arr[j] = state


def resolve(
    records: Iterable[LabelWindow], policy: ContradictionPolicy
) -> list[LabelWindow]:
    """Reconcile label windows from several experts.

    Before any mode runs, boundaries from different experts within
    ``snap_tolerance_days`` bars of each other are snapped to the earlier
    index.  Then:

    * ``KEEP_ALL``   — every expert's (snapped) windows are kept.
    * ``DEDUP``      — per bar, each distinct asserted state is kept exactly
      once; the result is emitted as stacked layers ``dedup0``, ``dedup1``...
      so each layer still satisfies the non-overlap invariant.
    * ``DEDUP_DROP_CONTRADICTIONS`` — one ``consensus`` layer; bars where
      experts assert different non-Unknown states become Unknown.
    """
    windows = list(records)
    validate_windows(windows)
    by_stock: dict[str, list[LabelWindow]] = {}
    for w in windows:
        by_stock.setdefault(w.stock_id, []).append(w)

    out: list[LabelWindow] = []
    for stock in sorted(by_stock):
        group = by_stock[stock]
        length = max(w.end_idx for w in group) + 1
        experts = sorted({w.expert_id for w in group})
        per_expert = {
            e: _state_array([w for w in group if w.expert_id == e], length)
            for e in experts
        }
        _snap_boundaries(per_expert, policy.snap_tolerance_days)

        if policy.mode == ResolveMode.KEEP_ALL:
            for e in experts:
                out.extend(_runs_to_windows(per_expert[e], stock, e))
            continue

        if policy.mode == ResolveMode.DEDUP:
            # layer k holds the k-th distinct state of each bar, in expert order
            layers: list[list[LabelState | None]] = []
            for i in range(length):
                seen: list[LabelState] = []
                for e in experts:
                    s = per_expert[e][i]
                    if s is not None and s not in seen:
                        seen.append(s)
                while len(layers) < len(seen):
                    layers.append([None] * length)
                for k, s in enumerate(seen):
                    layers[k][i] = s
            for k, layer in enumerate(layers):
                out.extend(_runs_to_windows(layer, stock, f"dedup{k}"))
            continue

        # DEDUP_DROP_CONTRADICTIONS
        merged: list[LabelState | None] = [None] * length
        for i in range(length):
            states = {per_expert[e][i] for e in experts} - {None}
            solid = states - {LabelState.UNKNOWN}
            if len(solid) > 1:
                merged[i] = LabelState.UNKNOWN
            elif len(solid) == 1:
                merged[i] = solid.pop()
            elif states:
                merged[i] = LabelState.UNKNOWN
        out.extend(_runs_to_windows(merged, stock, "consensus"))
    return out


# ---------------------------------------------------------------------------
# Label file format (shared with the labeling UI)


def windows_to_doc(
    stock_id: str, expert_id: str, windows: Sequence[LabelWindow]
) -> dict:
    return {
        "stock_id": stock_id,
        "expert_id": expert_id,
        "windows": [
            {"start": w.start_idx, "end": w.end_idx, "state": w.state.value}
            for w in sorted(windows, key=lambda w: w.start_idx)
        ],
    }


def doc_to_windows(doc: dict) -> list[LabelWindow]:
    try:
        stock = doc["stock_id"]
        expert = doc["expert_id"]
        raw = doc["windows"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad label document: missing {exc}") from exc
    windows = [
        LabelWindow(stock, expert, int(w["start"]), int(w["end"]), LabelState(w["state"]))
        for w in raw
    ]
    validate_windows(windows)
    return windows


def write_label_file(path: str | Path, windows: Sequence[LabelWindow]) -> None:
    """One JSON document per stock+expert."""
    if not windows:
        raise ValueError("refusing to write an empty label file")
    stocks = {w.stock_id for w in windows}
    experts = {w.expert_id for w in windows}
    if len(stocks) > 1 or len(experts) > 1:
        raise ValueError("a label file holds a single stock and expert")
    doc = windows_to_doc(stocks.pop(), experts.pop(), windows)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_label_file(path: str | Path) -> list[LabelWindow]:
    return doc_to_windows(json.loads(Path(path).read_text(encoding="utf-8")))
