"""From labeled series to training files: datasets in the CTF text format.

One dataset per submodel. Detector slices answer "is a changepoint in
here", locator slices answer "where", classifier windows answer "which
trend". Records are plain `|labels ...|features ...` lines, so the files
are inspectable with head and wc.
"""
import tempfile
from pathlib import Path

from trendlab.ctf import parse_ctf_file
from trendlab.models import ModelKind, SliceSpec, load_dataset, make_dataset
from trendlab.synthetic import SyntheticConfig, make_universe

root = Path(tempfile.mkdtemp(prefix="dataset_demo_"))
universe = make_universe(4, 11, SyntheticConfig(n_bars=400, seg_min=40, seg_max=120))
data = [(series, windows) for series, windows, _ in universe]
split_date = universe[0][0].bars[300].date
spec = SliceSpec(n_days=25, skip=5)

for kind in ModelKind:
    path = root / f"{kind.value}.ctf"
    manifest = make_dataset(kind, data, path, slice_spec=spec,
                            split_date=split_date, side="train", normalize=True)
    labels = [r["label"] for r in manifest.records]
    print(f"{kind.value}: {len(manifest.records)} records, "
          f"label_dim={manifest.label_dim}, first label {labels[0]}")

# the raw file is one line per record; the sidecar manifest mirrors it
det = root / "change_detector.ctf"
first = det.read_text().splitlines()[0]
print(f"\nfirst detector line starts: {first[:60]}...")
print(f"sidecar present: {(det.parent / (det.name + '.manifest.json')).is_file()}")

# parse lazily, or load straight into arrays for training
n_cp = sum(rec.labels[0] for rec in parse_ctf_file(det, 1, 9216))
x, y, manifest = load_dataset(det)
print(f"loaded x{x.shape} y{y.shape}; {int(n_cp)} slices contain a changepoint")
print(f"feature range after normalize: [{x.min():.0f}, {x.max():.0f}]")
