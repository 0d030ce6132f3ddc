"""Trading simulation: scripted signals, model-driven runs, baselines.

Profit is measured in log-return percentage points: a day in position
contributes position * (ln C_t - ln C_{t-1}) * 100. YearProfit annualizes
per in-position day, YearProfit_avg per calendar data point; the gap
between them is the reward for being out of the market at the right time.
"""
from trendlab.models import SliceSpec, build_change_detector, build_change_locator, build_trend_classifier
from trendlab.simulate import (
    ModelBundle,
    TradePolicy,
    baseline_buy_and_hold,
    baseline_expert,
    run_scripted,
    run_simulation,
    signals_from_labels,
)
from trendlab.synthetic import SyntheticConfig, make_universe

universe = make_universe(4, 31, SyntheticConfig(n_bars=300, seg_min=40, seg_max=100))
stocks = [s for s, _, _ in universe]
windows = [w for _, ws, _ in universe for w in ws]


def show(name, report):
    year = "n/a" if report.year_profit_pct is None else f"{report.year_profit_pct:7.2f}"
    print(f"{name:<22} profit {report.profit_pct:8.2f}  days_in {report.days_in:4d}  "
          f"times_in {report.times_in:3d}  YearProfit {year}")


# an oracle that reads the generator's own labels, long/short/flat
sig_maps = signals_from_labels(windows)


def oracle(series, t):
    return sig_maps.get(series.stock_id, {}).get(t, 0)


default = TradePolicy(allow_short=True, flat_ignored=False)
report, logs = run_scripted(stocks, oracle, default, labels=windows)
show("oracle signals", report)

# policy variants on the same signals
no_short, _ = run_scripted(stocks, oracle, TradePolicy(False, False), labels=windows)
show("  without shorts", no_short)
hold_flat, _ = run_scripted(stocks, oracle, TradePolicy(True, True), labels=windows)
show("  holding through flat", hold_flat)

show("buy and hold", baseline_buy_and_hold(stocks))
for expert, rep in baseline_expert(stocks, windows).items():
    show(f"expert '{expert}' replay", rep)

# signal vs truth, counted per labeled day: rows down/flat/up, cols same
print("\ncontingency (truth x signal):")
for state, row in zip(("down", "flat", "up"), report.contingency):
    print(f"  {state:<5} {row}")

# untrained models still exercise the full pipeline: slice, render, infer
bundle = ModelBundle(
    detector=build_change_detector(seed=0),
    locator=build_change_locator(seed=1),
    classifier=build_trend_classifier(seed=2),
    normalize=True,
    threshold=0.5)
model_report, _ = run_simulation(stocks, bundle, SliceSpec(25, 5))
print()
show("untrained models", model_report)
print("(train the bundle first for signals that mean something)")
