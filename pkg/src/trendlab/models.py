"""The three models and their data pipeline.

* change detector  — does this n_days slice contain a state change? (sigmoid)
* change locator   — where in the slice is the latest change? (linear, 0..1)
* trend classifier — is this window down, flat or up? (3-way softmax)

This module turns series+labels into CTF datasets, builds the fixed
architectures, trains them, and evaluates with the standard metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .ctf import CtfRecord, parse_ctf_file, write_ctf_file
from .labels import (
    ChangepointSet,
    ContradictionPolicy,
    LabelState,
    LabelWindow,
    ResolveMode,
    changepoint_in_slice,
    derive_changepoints,
    last_changepoint_position,
    resolve,
    trend_direction,
)
from .marketdata import OhlcSeries, PriceScale, to_log
from .metrics import auc_roc, confusion, precision_recall_f, r2_mae
from .nn import (
    CeSoftmax,
    Conv2d,
    Dense,
    FMeasure,
    Loss,
    Network,
    Relu,
    Sigmoid,
    Softmax,
    SquaredError,
    TrainConfig,
    WeightedBce,
    save_checkpoint,
    sgd_train,
)
from .raster import RenderStyle, render

__all__ = [
    "ModelKind",
    "SliceSpec",
    "DatasetManifest",
    "TrainSettings",
    "CLASS_NAMES",
    "build_change_detector",
    "build_change_locator",
    "build_trend_classifier",
    "build_model",
    "make_dataset",
    "load_dataset",
    "train_model",
    "evaluate_model",
    "predict_detector",
    "predict_locator",
    "predict_classifier",
    "loss_from_name",
    "loss_to_name",
    "read_train_settings",
    "write_train_settings",
]

CLASS_NAMES = ("down", "flat", "up")  # one-hot index = direction + 1


class ModelKind(str, Enum):
    CHANGE_DETECTOR = "change_detector"
    CHANGE_LOCATOR = "change_locator"
    TREND_CLASSIFIER = "trend_classifier"


@dataclass(frozen=True)
class SliceSpec:
    n_days: int = 25
    skip: int = 5

    def __post_init__(self):
        if self.n_days < 2:
            raise ValueError("n_days must be >= 2")
        if not 1 <= self.skip <= self.n_days:
            raise ValueError("skip must be in 1..n_days")


# ---------------------------------------------------------------------------
# Architectures

_DETECTOR_TRUNK = (
    lambda: Conv2d(8, (5, 5), (2, 2), "same"),
    lambda: Relu(),
    lambda: Conv2d(16, (5, 5), (2, 2), "same"),
    lambda: Relu(),
    lambda: Conv2d(16, (3, 3), (2, 2), "same"),
    lambda: Relu(),
)


def build_change_detector(seed: int = 0) -> Network:
    layers = [make() for make in _DETECTOR_TRUNK] + [Dense(1), Sigmoid()]
    return Network(layers, (3, 48, 64), seed)


def build_change_locator(seed: int = 0) -> Network:
    layers = [make() for make in _DETECTOR_TRUNK] + [Dense(1)]
    return Network(layers, (3, 48, 64), seed)


def build_trend_classifier(dpi: int = 10, seed: int = 0) -> Network:
    if dpi == 10:
        conv1, conv2 = Conv2d(8, (25, 25), (5, 5), "same"), Conv2d(16, (5, 5), (2, 2), "same")
        input_shape = (3, 48, 64)
    elif dpi == 20:
        conv1, conv2 = Conv2d(8, (50, 50), (10, 10), "same"), Conv2d(16, (10, 10), (4, 4), "same")
        input_shape = (3, 96, 128)
    else:
        raise ValueError(f"no trend-classifier architecture for dpi={dpi}")
    layers = [conv1, Relu(), conv2, Relu(), Dense(3), Softmax()]
    return Network(layers, input_shape, seed)


def build_model(kind: ModelKind, dpi: int = 10, seed: int = 0) -> Network:
    if kind is ModelKind.CHANGE_DETECTOR:
        return build_change_detector(seed)
    if kind is ModelKind.CHANGE_LOCATOR:
        return build_change_locator(seed)
    return build_trend_classifier(dpi, seed)


_COMPATIBLE_LOSSES: dict[ModelKind, tuple[type, ...]] = {
    ModelKind.CHANGE_DETECTOR: (WeightedBce, FMeasure),
    ModelKind.CHANGE_LOCATOR: (SquaredError,),
    ModelKind.TREND_CLASSIFIER: (CeSoftmax,),
}


def check_loss_compatible(kind: ModelKind, loss: Loss) -> None:
    if not isinstance(loss, _COMPATIBLE_LOSSES[kind]):
        allowed = ", ".join(c.__name__ for c in _COMPATIBLE_LOSSES[kind])
        raise ValueError(f"{kind.value} trains with {allowed}, not {type(loss).__name__}")


# ---------------------------------------------------------------------------
# Inference wrappers


def _predict_chunked(net: Network, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    outs = [net.predict(x[i : i + chunk]) for i in range(0, x.shape[0], chunk)]
    return np.concatenate(outs, axis=0)


def predict_detector(net: Network, x: np.ndarray) -> np.ndarray:
    """Change probability per sample, shape (batch,)."""
    return _predict_chunked(net, x)[:, 0]


def predict_locator(net: Network, x: np.ndarray) -> np.ndarray:
    """Change position per sample, clamped to [0, 1] here and only here;
    the network itself stays linear so training gradients are unclamped."""
    return np.clip(_predict_chunked(net, x)[:, 0], 0.0, 1.0)


def predict_classifier(net: Network, x: np.ndarray) -> np.ndarray:
    """Class probabilities per sample, shape (batch, 3), order (down, flat, up)."""
    return _predict_chunked(net, x)


# ---------------------------------------------------------------------------
# Dataset assembly


@dataclass(frozen=True)
class DatasetManifest:
    kind: ModelKind
    n_days: int
    skip: int
    dpi: int
    normalize: bool
    policy_mode: str
    snap_tolerance_days: int
    split_date: str | None
    side: str | None
    label_dim: int
    feature_shape: tuple[int, ...]
    records: tuple[dict, ...]

    @property
    def count(self) -> int:
        return len(self.records)

    def save(self, path: str | Path) -> None:
        doc = {
            "kind": self.kind.value,
            "n_days": self.n_days,
            "skip": self.skip,
            "dpi": self.dpi,
            "normalize": self.normalize,
            "policy_mode": self.policy_mode,
            "snap_tolerance_days": self.snap_tolerance_days,
            "split_date": self.split_date,
            "side": self.side,
            "label_dim": self.label_dim,
            "feature_shape": list(self.feature_shape),
            "records": list(self.records),
        }
        Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            kind=ModelKind(doc["kind"]),
            n_days=doc["n_days"],
            skip=doc["skip"],
            dpi=doc["dpi"],
            normalize=doc["normalize"],
            policy_mode=doc["policy_mode"],
            snap_tolerance_days=doc["snap_tolerance_days"],
            split_date=doc["split_date"],
            side=doc["side"],
            label_dim=doc["label_dim"],
            feature_shape=tuple(doc["feature_shape"]),
            records=tuple(doc["records"]),
        )


def manifest_path(ctf_path: str | Path) -> Path:
    return Path(str(ctf_path) + ".manifest.json")


def _coverage(windows: list[LabelWindow], length: int) -> np.ndarray:
    covered = np.zeros(length, dtype=bool)
    for w in windows:
        if w.state != LabelState.UNKNOWN:
            covered[w.start_idx : w.end_idx + 1] = True
    return covered


def _side_bounds(
    side: str | None, split_idx: int | None, length: int
) -> tuple[int, int]:
    """Inclusive [lo, hi] bar range a record may touch."""
    if side is None:
        return 0, length - 1
    if split_idx is None:
        raise ValueError("side given without split_date")
    if side == "train":
        return 0, split_idx - 1
    if side == "test":
        return split_idx, length - 1
    raise ValueError(f"side must be 'train' or 'test', got {side!r}")


def _features(
    series_log: OhlcSeries, start: int, end: int, style: RenderStyle, normalize: bool
) -> tuple[float, ...]:
    tensor = render(series_log, start, end, style)
    flat = tensor.data.reshape(-1)
    if normalize:
        return tuple((flat / 255.0).tolist())
    return tuple(flat.astype(np.float64).tolist())


def make_dataset(
    kind: ModelKind,
    data: Sequence[tuple[OhlcSeries, Sequence[LabelWindow]]],
    out_path: str | Path,
    slice_spec: SliceSpec = SliceSpec(),
    policy: ContradictionPolicy = ContradictionPolicy(),
    style: RenderStyle = RenderStyle(),
    split_date: date | None = None,
    side: str | None = None,
    normalize: bool = False,
) -> DatasetManifest:
    """Assemble a CTF dataset plus a JSON manifest describing every record.

    Labels are first reconciled across experts per the policy.  Detector
    records are every skip-th n_days slice fully covered by labeled,
    non-Unknown ground; locator records are the subset containing at least
    one changepoint; classifier records are whole markup windows.  No record
    ever straddles the split date when a side is requested.
    """
    if side is not None and split_date is None:
        raise ValueError("side requires split_date")
    n_days, skip = slice_spec.n_days, slice_spec.skip
    label_dim = 3 if kind is ModelKind.TREND_CLASSIFIER else 1
    feature_shape = (3, style.height_px, style.width_px)

    by_series: list[tuple[OhlcSeries, dict[str, list[LabelWindow]]]] = []
    for series, windows in data:
        resolved = resolve(list(windows), policy)
        layers: dict[str, list[LabelWindow]] = {}
        for w in resolved:
            layers.setdefault(w.expert_id, []).append(w)
        by_series.append((series, layers))

    manifest_records: list[dict] = []

    def emit() -> Iterator[CtfRecord]:
        for series, layers in by_series:
            series_log = series if series.scale is PriceScale.NATURAL_LOG else to_log(series)
            n = len(series)
            split_idx = series.index_of_date(split_date) if split_date else None
            lo, hi = _side_bounds(side, split_idx, n)
            log_closes = series_log.closes()
            for expert in sorted(layers):
                windows = layers[expert]
                if kind is ModelKind.TREND_CLASSIFIER:
                    for w in windows:
                        if w.state is LabelState.UNKNOWN or len(w) < 2:
                            continue
                        if w.start_idx < lo or w.end_idx > hi:
                            continue
                        direction = trend_direction(w, log_closes)
                        label = [0.0, 0.0, 0.0]
                        label[direction + 1] = 1.0
                        manifest_records.append(
                            _record_meta(series, expert, w.start_idx, w.end_idx, label)
                        )
                        yield CtfRecord(
                            label,
                            _features(series_log, w.start_idx, w.end_idx, style, normalize),
                        )
                    continue

                covered = _coverage(windows, n)
                cps = derive_changepoints(windows)
                first = max(lo, 0)
                for start in range(first, hi - n_days + 2, skip):
                    end = start + n_days - 1
                    if not covered[start : end + 1].all():
                        continue
                    if kind is ModelKind.CHANGE_DETECTOR:
                        label = [float(changepoint_in_slice(start, n_days, cps))]
                    else:
                        if not changepoint_in_slice(start, n_days, cps):
                            continue
                        label = [last_changepoint_position(start, n_days, cps)]
                    manifest_records.append(
                        _record_meta(series, expert, start, end, label)
                    )
                    yield CtfRecord(label, _features(series_log, start, end, style, normalize))

    count = write_ctf_file(emit(), out_path)
    if count == 0:
        raise ValueError("dataset is empty: every candidate slice was excluded")
    manifest = DatasetManifest(
        kind=kind,
        n_days=n_days,
        skip=skip,
        dpi=style.dpi,
        normalize=normalize,
        policy_mode=policy.mode.value,
        snap_tolerance_days=policy.snap_tolerance_days,
        split_date=split_date.isoformat() if split_date else None,
        side=side,
        label_dim=label_dim,
        feature_shape=feature_shape,
        records=tuple(manifest_records),
    )
    manifest.save(manifest_path(out_path))
    return manifest


def _record_meta(
    series: OhlcSeries, expert: str, start: int, end: int, label: list[float]
) -> dict:
    return {
        "stock": series.stock_id,
        "expert": expert,
        "start": start,
        "end": end,
        "start_date": series.bars[start].date.isoformat(),
        "end_date": series.bars[end].date.isoformat(),
        "label": label,
    }


def load_dataset(ctf_path: str | Path) -> tuple[np.ndarray, np.ndarray, DatasetManifest]:
    """Materialize a CTF dataset (with its manifest sidecar) as arrays."""
    manifest = DatasetManifest.load(manifest_path(ctf_path))
    n = manifest.count
    x = np.empty((n, *manifest.feature_shape))
    y = np.empty((n, manifest.label_dim))
    feat_dim = int(np.prod(manifest.feature_shape))
    i = 0
    for rec in parse_ctf_file(ctf_path, manifest.label_dim, feat_dim):
        x[i] = np.asarray(rec.features).reshape(manifest.feature_shape)
        y[i] = rec.labels
        i += 1
    if i != n:
        raise ValueError(f"{ctf_path}: {i} records but manifest lists {n}")
    return x, y, manifest


# ---------------------------------------------------------------------------
# Training and evaluation


def train_model(
    kind: ModelKind,
    ctf_path: str | Path,
    cfg: TrainConfig,
    out_checkpoint: str | Path | None = None,
) -> tuple[Network, list[float]]:
    """Build the architecture for kind, train it on the dataset, and persist
    checkpoint + loss history when an output path is given."""
    check_loss_compatible(kind, cfg.loss)
    x, y, manifest = load_dataset(ctf_path)
    net = build_model(kind, dpi=manifest.dpi, seed=cfg.seed)
    if tuple(manifest.feature_shape) != net.input_shape:
        raise ValueError(
            f"dataset features {manifest.feature_shape} do not fit {kind.value} "
            f"input {net.input_shape}"
        )
    net, history = sgd_train(net, x, y, cfg)
    if out_checkpoint is not None:
        save_checkpoint(net, out_checkpoint)
        Path(str(out_checkpoint) + ".history.json").write_text(
            json.dumps(history) + "\n", encoding="utf-8"
        )
    return net, history


def evaluate_model(kind: ModelKind, net: Network, ctf_path: str | Path) -> dict:
    """Metric report as a JSON-ready dict; metrics whose denominator is
    empty come back as None."""
    x, y, _ = load_dataset(ctf_path)
    if kind is ModelKind.CHANGE_DETECTOR:
        probs = predict_detector(net, x)
        truth = y[:, 0].astype(int)
        preds = (probs >= 0.5).astype(int)
        cm = confusion(truth.tolist(), preds.tolist(), [0, 1])
        try:
            auc = auc_roc(probs, truth)
        except ValueError:
            auc = None
        per_class = {}
        for cls in (0, 1):
            p, r, f = precision_recall_f(cm, cls)
            per_class[str(cls)] = {"precision": p, "recall": r, "f1": f}
        pos = int(truth.sum())
        minority = 1 if pos * 2 <= truth.size else 0
        return {
            "kind": kind.value,
            "count": int(truth.size),
            "accuracy": cm.accuracy,
            "auc": auc,
            "confusion": cm.counts.tolist(),
            "classes": per_class,
            "minority_class": str(minority),
        }

    if kind is ModelKind.CHANGE_LOCATOR:
        preds = predict_locator(net, x)
        truth = y[:, 0]
        r2, mae = r2_mae(preds, truth)
        return {
            "kind": kind.value,
            "count": int(truth.size),
            "r2": r2,
            "mae": mae,
            "pred_std": float(preds.std()),
            "target_std": float(truth.std()),
        }

    probs = predict_classifier(net, x)
    pred_idx = probs.argmax(axis=1)
    true_idx = y.argmax(axis=1)
    cm = confusion(
        [CLASS_NAMES[i] for i in true_idx],
        [CLASS_NAMES[i] for i in pred_idx],
        CLASS_NAMES,
    )
    normalized, empty_rows = cm.normalized()
    counts = np.bincount(true_idx, minlength=3)
    return {
        "kind": kind.value,
        "count": int(true_idx.size),
        "accuracy": cm.accuracy,
        "confusion": cm.counts.tolist(),
        "confusion_normalized": normalized.tolist(),
        "empty_rows": empty_rows,
        "majority_share": float(counts.max() / counts.sum()),
    }


# ---------------------------------------------------------------------------
# Train-settings file (plain key/value text)

_LOSS_NAMES = {
    "weighted_bce": WeightedBce,
    "f_measure": FMeasure,
    "squared_error": SquaredError,
    "ce_softmax": CeSoftmax,
}


def loss_from_name(name: str, w: float | None = None) -> Loss:
    if name not in _LOSS_NAMES:
        raise ValueError(f"unknown loss {name!r}; one of {sorted(_LOSS_NAMES)}")
    if name == "weighted_bce":
        return WeightedBce(w)
    if w is not None:
        raise ValueError(f"loss {name!r} takes no weight")
    return _LOSS_NAMES[name]()


def loss_to_name(loss: Loss) -> tuple[str, float | None]:
    for name, cls in _LOSS_NAMES.items():
        if isinstance(loss, cls):
            return name, loss.w if isinstance(loss, WeightedBce) else None
    raise TypeError(f"unknown loss {loss!r}")


@dataclass(frozen=True)
class TrainSettings:
    """Everything one training run needs, as written to a settings file."""

    kind: ModelKind
    loss: Loss
    iterations: int
    n_days: int = 25
    skip: int = 5
    dpi: int = 10
    learning_rate: float = 0.001
    minibatch: int = 64
    seed: int = 0
    policy: ContradictionPolicy = field(default_factory=ContradictionPolicy)

    def slice_spec(self) -> SliceSpec:
        return SliceSpec(self.n_days, self.skip)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            loss=self.loss,
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            minibatch=self.minibatch,
            seed=self.seed,
        )


def write_train_settings(settings: TrainSettings, path: str | Path) -> None:
    loss_name, w = loss_to_name(settings.loss)
    w_text = "auto" if w is None else repr(w)
    lines = [
        f"kind = {settings.kind.value}",
        f"n_days = {settings.n_days}",
        f"skip = {settings.skip}",
        f"dpi = {settings.dpi}",
        f"loss = {loss_name}",
        f"w = {w_text}",
        f"learning_rate = {settings.learning_rate!r}",
        f"minibatch = {settings.minibatch}",
        f"iterations = {settings.iterations}",
        f"seed = {settings.seed}",
        f"policy = {settings.policy.mode.value}",
        f"snap_tolerance_days = {settings.policy.snap_tolerance_days}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_train_settings(path: str | Path) -> TrainSettings:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    known = {
        "kind", "n_days", "skip", "dpi", "loss", "w", "learning_rate",
        "minibatch", "iterations", "seed", "policy", "snap_tolerance_days",
    }
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    for required in ("kind", "loss", "iterations"):
        if required not in values:
            raise ValueError(f"{path}: missing required key {required!r}")

    w_raw = values.get("w", "auto")
    w = None if w_raw == "auto" else float(w_raw)
    loss = loss_from_name(values["loss"], w if values["loss"] == "weighted_bce" else None)
    if values["loss"] != "weighted_bce" and w is not None:
        raise ValueError(f"{path}: w applies only to weighted_bce")
    return TrainSettings(
        kind=ModelKind(values["kind"]),
        loss=loss,
        iterations=int(values["iterations"]),
        n_days=int(values.get("n_days", "25")),
        skip=int(values.get("skip", "5")),
        dpi=int(values.get("dpi", "10")),
        learning_rate=float(values.get("learning_rate", "0.001")),
        minibatch=int(values.get("minibatch", "64")),
        seed=int(values.get("seed", "0")),
        policy=ContradictionPolicy(
            mode=ResolveMode(values.get("policy", "keep_all")),
            snap_tolerance_days=int(values.get("snap_tolerance_days", "0")),
        ),
    )
