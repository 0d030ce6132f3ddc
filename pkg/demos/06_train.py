"""Training the submodels: SGD, gradient checking, checkpoints.

Small sizes throughout so the whole script runs in well under a minute;
the point is the workflow, not the scores. Gradient checking compares
backprop against central finite differences and is the single most
valuable debugging tool in the package.
"""
import tempfile
from pathlib import Path

import numpy as np

from trendlab.models import (
    ModelKind,
    SliceSpec,
    build_change_detector,
    make_dataset,
    predict_detector,
    train_model,
)
from trendlab.nn import (
    Conv2d,
    Dense,
    Network,
    Relu,
    Sigmoid,
    TrainConfig,
    WeightedBce,
    grad_check,
    load_checkpoint,
    save_checkpoint,
)
from trendlab.synthetic import SyntheticConfig, make_universe

root = Path(tempfile.mkdtemp(prefix="train_demo_"))

# gradient check on a toy net: backprop vs finite differences
rng = np.random.default_rng(0)
toy = Network([Conv2d(2, (3, 3), (2, 2), "same"), Relu(), Dense(1), Sigmoid()],
              input_shape=(1, 8, 8), seed=1)
err = grad_check(toy, rng.standard_normal((4, 1, 8, 8)),
                 rng.integers(0, 2, (4, 1)).astype(float), WeightedBce(1.0))
print(f"gradient check max relative error: {err:.2e}")

# a real (if tiny) detector dataset
universe = make_universe(3, 23, SyntheticConfig(n_bars=300, seg_min=40, seg_max=100))
data = [(s, w) for s, w, _ in universe]
ctf = root / "detector.ctf"
make_dataset(ModelKind.CHANGE_DETECTOR, data, ctf,
             slice_spec=SliceSpec(n_days=25, skip=5), normalize=True)

ckpt = root / "detector.ckpt"
cfg = TrainConfig(WeightedBce(), iterations=60, learning_rate=0.001,
                  minibatch=16, seed=2)
net, history = train_model(ModelKind.CHANGE_DETECTOR, ctf, cfg, out_checkpoint=ckpt)
print(f"detector: {net.param_count} params, "
      f"loss {history[0]:.4f} -> {history[-1]:.4f} over {len(history)} iterations")

# checkpoints restore bit-identical weights
restored = load_checkpoint(ckpt)
probe = np.random.default_rng(3).random((2, 3, 48, 64))
assert np.array_equal(predict_detector(net, probe), predict_detector(restored, probe))
print(f"checkpoint round trip verified ({ckpt.stat().st_size} bytes)")

# saving the restored net reproduces the file exactly
again = root / "again.ckpt"
save_checkpoint(restored, again)
assert again.read_bytes() == ckpt.read_bytes()
print("re-saved checkpoint is byte-identical")
