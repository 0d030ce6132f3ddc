"""Expert markup: windows, changepoints, and contradiction handling.

Labels arrive as per-expert window lists over bar indices. Everything the
models learn from is derived here: changepoint indices from window seams,
trend direction from the price slope inside a window.
"""
import numpy as np

from trendlab.labels import (
    ContradictionPolicy,
    LabelState,
    LabelWindow,
    ResolveMode,
    changepoint_in_slice,
    derive_changepoints,
    last_changepoint_position,
    resolve,
    trend_direction,
    validate_windows,
)

alice = [
    LabelWindow("DEMO", "alice", 0, 39, LabelState.TREND_UP),
    LabelWindow("DEMO", "alice", 40, 69, LabelState.FLAT),
    LabelWindow("DEMO", "alice", 70, 99, LabelState.TREND_DOWN),
]
validate_windows(alice, series_len=100)
print("alice's markup validates: 3 non-overlapping windows over 100 bars")

# changepoints sit where the state switches: window starts after a different state
cps = derive_changepoints(alice)
print(f"changepoints: {list(cps.indices)}")

# slice-level questions the datasets ask
print(f"does [30, 54] contain one? {bool(changepoint_in_slice(30, 25, cps))}")
print(f"where in [30, 54] is the last one? {last_changepoint_position(30, 25, cps):.3f}")

# direction of a trend window comes from the OLS slope of its log closes
closes = np.linspace(4.0, 4.4, 40)  # rising
print(f"rising window direction: {trend_direction(alice[0], closes)} (up=+1)")

# a second expert who disagrees on bars 35..44
bob = [
    LabelWindow("DEMO", "bob", 35, 44, LabelState.TREND_DOWN),
]
merged = alice + bob
for mode in (ResolveMode.KEEP_ALL, ResolveMode.DEDUP):
    out = resolve(merged, ContradictionPolicy(mode=mode))
    experts = sorted({w.expert_id for w in out})
    print(f"{mode.value}: {len(out)} windows from {experts}")

# snapping absorbs near-miss boundaries (sloppy clicks) before comparing
snap = resolve(merged, ContradictionPolicy(mode=ResolveMode.DEDUP, snap_tolerance_days=2))
print(f"dedup with 2-day snap: {len(snap)} windows")
