"""Synthetic stocks with known regime structure.

Real expert markup is scarce, so the generator fabricates both sides at
once: a price path built from drifting segments, and the window list a
perfectly informed expert would draw over it. Seeded, hence repeatable.
"""
import collections

import numpy as np

from trendlab.synthetic import SyntheticConfig, generate_stock, jitter_boundaries, make_universe

cfg = SyntheticConfig(n_bars=500, seg_min=40, seg_max=150)
series, windows, cps = generate_stock("SYN000", 7, cfg)

print(f"{series.stock_id}: {len(series)} bars from {series.bars[0].date} "
      f"to {series.bars[-1].date}")
print(f"segments: {[(w.start_idx, w.end_idx, w.state.value) for w in windows]}")
print(f"changepoints at {cps}")

closes = np.array([b.close for b in series.bars])
for w in windows:
    seg = closes[w.start_idx : w.end_idx + 1]
    print(f"  {w.state.value:<10} {w.start_idx:>3}..{w.end_idx:<3} "
          f"close {seg[0]:8.2f} -> {seg[-1]:8.2f}")

# same seed, same stock; different seed, different regime plan
again, _, _ = generate_stock("SYN000", 7, cfg)
assert again == series
print("\nsame seed reproduces the series exactly")

# a universe is just many seeded stocks with a shared calendar
universe = make_universe(5, 99, cfg)
states = collections.Counter(
    w.state.value for _, ws, _ in universe for w in ws)
print(f"universe of {len(universe)} stocks, window states: {dict(states)}")

# a sloppier second expert: boundaries jittered by a few days
rng = np.random.default_rng(1)
sloppy = jitter_boundaries(windows, "intern", rng, max_shift=3)
moved = sum(a.start_idx != b.start_idx for a, b in zip(windows, sloppy))
print(f"jittered copy for expert 'intern': {moved}/{len(windows)} starts moved")
