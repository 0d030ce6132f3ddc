"""Candlestick rasterization: price slices to fixed-size pixel tensors.

The models never see numbers, only images: green/red bodies with wicks on
a white canvas, always 48x64 at dpi 10 regardless of how many bars the
slice holds. PPM output lets you eyeball the result in any image viewer.
"""
import tempfile
from pathlib import Path

import numpy as np

from trendlab.marketdata import to_log
from trendlab.raster import RenderStyle, render, render_binary, write_ppm
from trendlab.synthetic import SyntheticConfig, generate_stock

series, _, _ = generate_stock("SYN000", 42, SyntheticConfig(n_bars=300, seg_min=40, seg_max=120))
logged = to_log(series)

t = render(logged, 100, 124)  # a 25-day slice
print(f"25-day slice renders to {t.data.shape} = {t.data.size} bytes")

colors = {tuple(int(v) for v in t.data[:, y, x]) for y in range(48) for x in range(64)}
print(f"distinct colors: {sorted(colors)}")

green = int((t.data[1] == 255).sum() - (t.data[0] == 255).sum())
print(f"green-minus-red pixel balance: {green:+d} "
      f"({'rising' if green > 0 else 'falling'} slice, roughly)")

assert t.tobytes() == render(logged, 100, 124).tobytes()
print("re-rendering is byte-stable")

# dpi scales the canvas; 20 doubles both dimensions
t20 = render(logged, 100, 124, RenderStyle(dpi=20))
print(f"dpi=20 gives {t20.data.shape}")

# training uses the binarized form: pure 0/255, no antialiasing artifacts
tb = render_binary(t)
print(f"binarized values: {sorted(np.unique(tb.data).tolist())}")

out = Path(tempfile.mkdtemp(prefix="render_demo_")) / "slice.ppm"
write_ppm(t, out)
print(f"wrote {out} ({out.stat().st_size} bytes)")
