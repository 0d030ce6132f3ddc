import numpy as np
import pytest

from trendlab.labels import (
    ChangepointSet,
    ContradictionPolicy,
    LabelState,
    LabelWindow,
    OverlapError,
    ResolveMode,
    changepoint_in_slice,
    derive_changepoints,
    doc_to_windows,
    last_changepoint_position,
    ols_slope,
    read_label_file,
    resolve,
    trend_direction,
    validate_windows,
    windows_to_doc,
    write_label_file,
)

UP = LabelState.TREND_UP
DOWN = LabelState.TREND_DOWN
FLAT = LabelState.FLAT
UNKNOWN = LabelState.UNKNOWN


def w(start, end, state, stock="S", expert="e1"):
    return LabelWindow(stock, expert, start, end, state)


# ---------------------------------------------------------------------------
# validation


def test_overlap_rejected_with_indices():
    with pytest.raises(OverlapError) as err:
        validate_windows([w(0, 10, UP), w(10, 20, FLAT)])
    assert err.value.offending == [(0, 10), (10, 20)]


def test_adjacent_windows_are_fine():
    validate_windows([w(0, 10, UP), w(11, 20, FLAT)])


def test_overlap_checked_per_expert():
    validate_windows([w(0, 10, UP, expert="e1"), w(5, 20, FLAT, expert="e2")])


def test_window_outside_series_rejected():
    with pytest.raises(ValueError, match="outside series"):
        validate_windows([w(0, 30, UP)], series_len=20)


def test_bad_bounds_rejected():
    with pytest.raises(ValueError):
        LabelWindow("S", "e", 5, 4, UP)
    with pytest.raises(ValueError):
        LabelWindow("S", "e", -1, 4, UP)


# ---------------------------------------------------------------------------
# changepoints


def test_changepoint_at_adjacent_state_switch():
    cps = derive_changepoints([w(0, 9, UP), w(10, 19, FLAT), w(20, 30, DOWN)])
    assert cps.indices == (10, 20)


def test_gap_breaks_adjacency():
    cps = derive_changepoints([w(0, 9, UP), w(11, 19, FLAT)])
    assert cps.indices == ()


def test_unknown_breaks_adjacency():
    cps = derive_changepoints([w(0, 9, UP), w(10, 14, UNKNOWN), w(15, 19, FLAT)])
    assert cps.indices == ()


def test_same_state_no_changepoint():
    cps = derive_changepoints([w(0, 9, UP), w(10, 19, UP)])
    assert cps.indices == ()


def test_mixed_experts_rejected():
    with pytest.raises(ValueError, match="single expert"):
        derive_changepoints([w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e2")])


def test_changepoint_in_slice_boundaries():
    cps = ChangepointSet("S", "e1", (10, 40))
    assert changepoint_in_slice(0, 25, cps) == 1  # slice [0,24] holds 10
    assert changepoint_in_slice(10, 25, cps) == 1  # cp exactly at slice start
    assert changepoint_in_slice(11, 25, cps) == 0  # slice [11,35] misses both
    assert changepoint_in_slice(16, 25, cps) == 1  # slice [16,40] holds 40
    assert changepoint_in_slice(41, 25, cps) == 0
    assert changepoint_in_slice(11, 25, ChangepointSet("S", "e1", (10,))) == 0


def test_last_changepoint_position():
    cps = ChangepointSet("S", "e1", (10, 20))
    # slice [0,24]: last cp is 20 -> 20/24
    assert last_changepoint_position(0, 25, cps) == 20 / 24
    assert last_changepoint_position(10, 25, cps) == 10 / 24
    # slice [20,44]: only cp 20 at its very start
    assert last_changepoint_position(20, 25, cps) == 0.0
    with pytest.raises(ValueError, match="no changepoint"):
        last_changepoint_position(21, 25, cps)


# ---------------------------------------------------------------------------
# trend direction


def test_ols_slope_exact_on_line():
    assert ols_slope([1.0, 4.0, 7.0, 10.0]) == pytest.approx(3.0, abs=1e-12)


def test_direction_from_slope_sign():
    closes = np.linspace(0.0, 1.0, 30)
    assert trend_direction(w(0, 29, UP), closes) == 1
    assert trend_direction(w(0, 29, DOWN), closes[::-1].copy()) == -1


def test_flat_is_zero_regardless_of_slope():
    closes = np.linspace(0.0, 1.0, 30)
    assert trend_direction(w(0, 29, FLAT), closes) == 0


def test_zero_slope_trend_warns():
    closes = np.ones(30)
    with pytest.warns(RuntimeWarning, match="zero regression slope"):
        assert trend_direction(w(0, 29, UP), closes) == 0


def test_direction_rejects_unknown_and_short():
    closes = np.linspace(0.0, 1.0, 30)
    with pytest.raises(ValueError):
        trend_direction(w(0, 29, UNKNOWN), closes)
    with pytest.raises(ValueError):
        trend_direction(w(3, 3, UP), closes)
    with pytest.raises(ValueError):
        trend_direction(w(0, 40, UP), closes)


def test_direction_uses_window_bars_only():
    closes = np.concatenate([np.linspace(1, 0, 20), np.linspace(0, 2, 20)])
    assert trend_direction(w(0, 19, DOWN), closes) == -1
    assert trend_direction(w(20, 39, UP), closes) == 1


# ---------------------------------------------------------------------------
# resolution


def test_keep_all_preserves_disjoint_experts():
    a = [w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e1")]
    b = [w(0, 19, DOWN, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.KEEP_ALL))
    assert sorted(out, key=lambda x: (x.expert_id, x.start_idx)) == sorted(
        a + b, key=lambda x: (x.expert_id, x.start_idx)
    )


def test_dedup_merges_identical_markups():
    a = [w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e1")]
    b = [w(0, 9, UP, expert="e2"), w(10, 19, FLAT, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.DEDUP))
    assert {x.expert_id for x in out} == {"dedup0"}
    assert [(x.start_idx, x.end_idx, x.state) for x in out] == [
        (0, 9, UP),
        (10, 19, FLAT),
    ]


def test_dedup_layers_contradictions():
    a = [w(0, 9, UP, expert="e1")]
    b = [w(0, 9, DOWN, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.DEDUP))
    layers = {x.expert_id: x for x in out}
    assert layers["dedup0"].state == UP  # expert order is deterministic
    assert layers["dedup1"].state == DOWN
    validate_windows(out)


def test_drop_contradictions_yields_unknown():
    a = [w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e1")]
    b = [w(0, 14, UP, expert="e2"), w(15, 19, FLAT, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.DEDUP_DROP_CONTRADICTIONS))
    assert [x.expert_id for x in out] == ["consensus"] * len(out)
    states = {}
    for x in out:
        for i in range(x.start_idx, x.end_idx + 1):
            states[i] = x.state
    assert states[5] == UP
    assert states[12] == UNKNOWN  # e1 says flat, e2 says up
    assert states[17] == FLAT


def test_unknown_is_not_a_contradiction():
    a = [w(0, 9, UP, expert="e1")]
    b = [w(0, 9, UNKNOWN, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.DEDUP_DROP_CONTRADICTIONS))
    assert len(out) == 1 and out[0].state == UP


def test_snap_aligns_nearby_boundaries_to_earlier():
    a = [w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e1")]
    b = [w(0, 11, UP, expert="e2"), w(12, 19, FLAT, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.KEEP_ALL, snap_tolerance_days=3))
    by_expert = {}
    for x in out:
        by_expert.setdefault(x.expert_id, []).append((x.start_idx, x.end_idx, x.state))
    assert by_expert["e2"] == [(0, 9, UP), (10, 19, FLAT)]
    assert by_expert["e1"] == [(0, 9, UP), (10, 19, FLAT)]


def test_snap_outside_tolerance_untouched():
    a = [w(0, 9, UP, expert="e1"), w(10, 19, FLAT, expert="e1")]
    b = [w(0, 15, UP, expert="e2"), w(16, 19, FLAT, expert="e2")]
    out = resolve(a + b, ContradictionPolicy(ResolveMode.KEEP_ALL, snap_tolerance_days=3))
    by_expert = {}
    for x in out:
        by_expert.setdefault(x.expert_id, []).append((x.start_idx, x.end_idx))
    assert by_expert["e2"] == [(0, 15), (16, 19)]


def test_snap_needs_two_experts():
    a = [w(0, 9, UP), w(10, 12, FLAT), w(13, 19, DOWN)]
    out = resolve(a, ContradictionPolicy(ResolveMode.KEEP_ALL, snap_tolerance_days=5))
    assert [(x.start_idx, x.end_idx) for x in out] == [(0, 9), (10, 12), (13, 19)]


def test_snap_tolerance_bounds():
    with pytest.raises(ValueError):
        ContradictionPolicy(snap_tolerance_days=11)
    with pytest.raises(ValueError):
        ContradictionPolicy(snap_tolerance_days=-1)


# ---------------------------------------------------------------------------
# file format


def test_doc_round_trip(tmp_path):
    windows = [w(0, 9, UP), w(10, 19, UNKNOWN), w(20, 29, FLAT)]
    path = tmp_path / "S__e1.json"
    write_label_file(path, windows)
    assert read_label_file(path) == windows


def test_doc_schema():
    doc = windows_to_doc("S", "e1", [w(5, 9, DOWN)])
    assert doc == {
        "stock_id": "S",
        "expert_id": "e1",
        "windows": [{"start": 5, "end": 9, "state": "trend_down"}],
    }


def test_doc_rejects_overlap():
    doc = {
        "stock_id": "S",
        "expert_id": "e1",
        "windows": [
            {"start": 0, "end": 10, "state": "trend_up"},
            {"start": 5, "end": 20, "state": "flat"},
        ],
    }
    with pytest.raises(OverlapError):
        doc_to_windows(doc)


def test_doc_rejects_bad_state():
    doc = {"stock_id": "S", "expert_id": "e1", "windows": [{"start": 0, "end": 1, "state": "sideways"}]}
    with pytest.raises(ValueError):
        doc_to_windows(doc)


def test_write_refuses_mixed_or_empty(tmp_path):
    with pytest.raises(ValueError):
        write_label_file(tmp_path / "x.json", [])
    with pytest.raises(ValueError):
        write_label_file(
            tmp_path / "x.json", [w(0, 1, UP, expert="e1"), w(2, 3, UP, expert="e2")]
        )
