"""Quality metrics for the three models: confusion matrices, ROC AUC,
precision/recall/F, R-squared and MAE.

A metric whose denominator vanishes (no predicted positives, single-class
AUC, zero-variance target) is reported as None, never silently coerced to 0;
callers decide how to present absence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "ConfusionMatrix",
    "confusion",
    "auc_roc",
    "precision_recall_f",
    "r2_mae",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[Hashable, ...]
    counts: np.ndarray  # (n_classes, n_classes), rows = true class

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if c.shape != (k, k):
            raise ValueError(f"counts shape {c.shape} does not match {k} classes")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float | None:
        return float(np.trace(self.counts) / self.total) if self.total else None

    def normalized(self) -> tuple[np.ndarray, list[Hashable]]:
        """Row-normalized matrix plus the classes whose row had no samples
        (their rows are left all-zero)."""
        row_sums = self.counts.sum(axis=1, keepdims=True)
        empty = [cls for cls, s in zip(self.classes, row_sums[:, 0]) if s == 0]
        safe = np.where(row_sums == 0, 1, row_sums)
        return self.counts / safe, empty


def confusion(
    true_labels: Sequence[Hashable],
    predicted_labels: Sequence[Hashable],
    classes: Sequence[Hashable],
) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise ValueError("true and predicted label sequences differ in length")
    index = {cls: i for i, cls in enumerate(classes)}
    if len(index) != len(classes):
        raise ValueError("classes must be distinct")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in index:
            raise ValueError(f"unknown true label {t!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(tuple(classes), counts)


def auc_roc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative, ties
    counted half (the Mann-Whitney statistic)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-d sequences")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s)  # average ranks handle ties as half-wins
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def precision_recall_f(
    cm: ConfusionMatrix, positive: Hashable
) -> tuple[float | None, float | None, float | None]:
    """Standard one-vs-rest precision, recall and F1 for one class.

    Any of the three is None when its denominator is zero.
    """
    if positive not in cm.classes:
        raise ValueError(f"{positive!r} is not one of the matrix classes")
    i = cm.classes.index(positive)
    tp = int(cm.counts[i, i])
    fp = int(cm.counts[:, i].sum()) - tp
    fn = int(cm.counts[i, :].sum()) - tp
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def r2_mae(
    pred: Sequence[float], target: Sequence[float]
) -> tuple[float | None, float]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise ValueError("pred and target must be equal-length non-empty 1-d sequences")
    mae = float(np.mean(np.abs(p - t)))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        return None, mae
    ss_res = float(np.sum((p - t) ** 2))
    return 1.0 - ss_res / ss_tot, mae
