"""A feed-forward stack of layers with shape checking and explicit caches."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .layers import Layer, ShapeError, Softmax, layer_from_spec

__all__ = ["Network"]


class Network:
    """Layers are built (shapes propagated, weights drawn) at construction,
    so a Network is always ready to run.  Weight draws consume a single
    seeded generator in layer order, making initialization a pure function
    of (layer specs, input shape, seed).
    """

    def __init__(self, layers: Sequence[Layer], input_shape: tuple[int, ...], seed: int):
        if not layers:
            raise ValueError("a network needs at least one layer")
        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.build(shape, rng)
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from exc
        self.output_shape = shape

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    @property
    def has_softmax_head(self) -> bool:
        return isinstance(self.layers[-1], Softmax)

    def forward(
        self, x: np.ndarray, n_layers: int | None = None
    ) -> tuple[np.ndarray, list[Any]]:
        """Run the first n_layers (default all); returns output and caches."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(
                f"batch shape {x.shape[1:]} does not match network input {self.input_shape}"
            )
        active = self.layers if n_layers is None else self.layers[:n_layers]
        caches = []
        for i, layer in enumerate(active):
            try:
                x, cache = layer.forward(x)
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from exc
            caches.append(cache)
        return x, caches

    def backward(
        self, caches: list[Any], dy: np.ndarray
    ) -> tuple[np.ndarray, list[dict[str, np.ndarray]]]:
        """Backprop dy through the layers the caches came from.

        Returns the input gradient and one grads dict per cached layer
        (empty for parameterless layers), in layer order.
        """
        grads: list[dict[str, np.ndarray]] = [{} for _ in caches]
        for i in range(len(caches) - 1, -1, -1):
            dy, grads[i] = self.layers[i].backward(caches[i], dy)
        return dy, grads

    def predict(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward(x)
        return out

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    @classmethod
    def from_specs(
        cls, specs: Sequence[dict], input_shape: tuple[int, ...], seed: int
    ) -> "Network":
        return cls([layer_from_spec(s) for s in specs], input_shape, seed)

    def copy_weights_from(self, other: "Network") -> None:
        if self.specs() != other.specs() or self.input_shape != other.input_shape:
            raise ValueError("networks differ in structure")
        for mine, theirs in zip(self.layers, other.layers):
            for name, arr in theirs.weights.items():
                np.copyto(mine.weights[name], arr)
