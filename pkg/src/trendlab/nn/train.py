"""Plain minibatch SGD plus the finite-difference gradient checker.

When the loss is the fused softmax cross-entropy and the network ends in a
Softmax layer, training and checking run the stack up to (not including)
that layer and feed raw scores to the loss; inference keeps the softmax.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .losses import CeSoftmax, Loss, WeightedBce, loss_and_grad
from .network import Network

__all__ = ["TrainConfig", "TrainingDiverged", "resolve_loss", "sgd_train", "grad_check"]


@dataclass(frozen=True)
class TrainConfig:
    loss: Loss
    iterations: int
    learning_rate: float = 0.001
    minibatch: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.minibatch < 1:
            raise ValueError("minibatch must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, value: float):
        self.iteration = iteration
        self.value = value
        super().__init__(f"non-finite loss {value} at iteration {iteration}")


def resolve_loss(kind: Loss, labels: np.ndarray) -> Loss:
    """Fill in data-dependent loss parameters; today that is only the BCE
    weight, defaulting to the negative/positive count ratio."""
    if isinstance(kind, WeightedBce) and kind.w is None:
        y = np.asarray(labels, dtype=np.float64)
        pos = float(y.sum())
        neg = float(y.size - pos)
        if pos == 0 or neg == 0:
            raise ValueError("cannot derive a BCE class weight from single-class labels")
        return replace(kind, w=neg / pos)
    return kind


def _active_layers(net: Network, kind: Loss) -> int | None:
    if isinstance(kind, CeSoftmax) and net.has_softmax_head:
        return len(net.layers) - 1
    return None


def sgd_train(
    net: Network,
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> tuple[Network, list[float]]:
    """Train net in place; returns it with the per-iteration loss history.

    Minibatches are drawn by seeded epoch-wise shuffling without
    replacement, so a run is fully determined by (net, data, cfg).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = x.shape[0]
    if n == 0 or y.shape[0] != n:
        raise ValueError("features and labels must be non-empty and aligned")
    kind = resolve_loss(cfg.loss, y)
    n_layers = _active_layers(net, kind)
    mb = min(cfg.minibatch, n)

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    cursor = 0
    history: list[float] = []
    for it in range(cfg.iterations):
        if cursor + mb > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + mb]
        cursor += mb

        out, caches = net.forward(x[idx], n_layers)
        value, dout = loss_and_grad(kind, out, y[idx])
        if not np.isfinite(value):
            raise TrainingDiverged(it, value)
        _, grads = net.backward(caches, dout)
        for layer, g in zip(net.layers, grads):
            for name, dv in g.items():
                layer.weights[name] -= cfg.learning_rate * dv
        history.append(value)
    return net, history


def grad_check(
    net: Network,
    batch: np.ndarray,
    target: np.ndarray,
    kind: Loss,
    epsilon: float = 1e-5,
) -> float:
    """Max relative error between backprop and central finite differences,
    over every parameter of every layer."""
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    kind = resolve_loss(kind, y)
    n_layers = _active_layers(net, kind)

    out, caches = net.forward(x, n_layers)
    _, dout = loss_and_grad(kind, out, y)
    _, grads = net.backward(caches, dout)

    def loss_at() -> float:
        o, _ = net.forward(x, n_layers)
        return loss_and_grad(kind, o, y)[0]

    worst = 0.0
    for layer, g in zip(net.layers, grads):
        for name, analytic in g.items():
            w = layer.weights[name]
            flat_w = w.reshape(-1)
            flat_a = analytic.reshape(-1)
            for i in range(flat_w.size):
                orig = flat_w[i]
                flat_w[i] = orig + epsilon
                plus = loss_at()
                flat_w[i] = orig - epsilon
                minus = loss_at()
                flat_w[i] = orig
                numeric = (plus - minus) / (2.0 * epsilon)
                denom = max(abs(flat_a[i]), abs(numeric), 1e-6)
                worst = max(worst, abs(flat_a[i] - numeric) / denom)
    return worst
