"""Loss functions with exact analytic gradients w.r.t. the prediction.

The classifier losses come in two shapes: WeightedBce and FMeasure consume
probabilities (a sigmoid head), CeSoftmax consumes raw scores and fuses the
softmax for numerical stability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import logsumexp, xlogy

__all__ = [
    "WeightedBce",
    "FMeasure",
    "SquaredError",
    "CeSoftmax",
    "Loss",
    "loss_and_grad",
]


@dataclass(frozen=True)
class WeightedBce:
    """Binary cross-entropy with the positive term scaled by w.

    w=None means "resolve from data": the trainer substitutes the
    negative/positive count ratio of the training set.
    """

    w: float | None = None

    def __post_init__(self):
        if self.w is not None and self.w <= 0:
            raise ValueError("weight must be positive")


@dataclass(frozen=True)
class FMeasure:
    """1 minus soft F1 over the batch, from probabilistic TP/FP/FN counts."""


@dataclass(frozen=True)
class SquaredError:
    pass


@dataclass(frozen=True)
class CeSoftmax:
    """Mean cross-entropy of softmax(scores) against one-hot targets."""


Loss = Union[WeightedBce, FMeasure, SquaredError, CeSoftmax]


def _check(pred: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"pred shape {p.shape} != target shape {t.shape}")
    if p.size == 0:
        raise ValueError("empty batch")
    return p, t


def loss_and_grad(kind: Loss, pred, target) -> tuple[float, np.ndarray]:
    """Scalar loss and its exact gradient w.r.t. pred (same shape)."""
    p, t = _check(pred, target)

    if isinstance(kind, SquaredError):
        diff = p - t
        with np.errstate(over="ignore"):  # inf surfaces as TrainingDiverged
            return float(np.mean(diff**2)), 2.0 * diff / p.size

    if isinstance(kind, WeightedBce):
        if kind.w is None:
            raise ValueError("WeightedBce weight unresolved; set w or train via a dataset")
        if (p <= 0).any() or (p >= 1).any():
            raise ValueError("WeightedBce predictions must lie strictly in (0, 1)")
        w = kind.w
        value = -float(np.mean(w * xlogy(t, p) + xlogy(1.0 - t, 1.0 - p)))
        grad = -(w * t / p - (1.0 - t) / (1.0 - p)) / p.size
        return value, grad

    if isinstance(kind, FMeasure):
        if (p < 0).any() or (p > 1).any():
            raise ValueError("FMeasure predictions must lie in [0, 1]")
        tp = float((p * t).sum())
        denom = float(p.sum() + t.sum())  # = 2*TP + FP + FN
        if denom == 0.0:
            raise ValueError("FMeasure undefined: no positive mass in batch")
        value = 1.0 - 2.0 * tp / denom
        grad = -2.0 * (t * denom - tp) / denom**2
        return value, grad

    if isinstance(kind, CeSoftmax):
        if p.ndim != 2:
            raise ValueError("CeSoftmax expects (batch, classes) scores")
        n = p.shape[0]
        lse = logsumexp(p, axis=1)
        value = float(np.mean(lse - (p * t).sum(axis=1)))
        q = np.exp(p - lse[:, None])
        return value, (q - t) / n

    raise TypeError(f"unknown loss {kind!r}")
