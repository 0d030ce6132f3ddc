"""Layers: each one knows its forward pass, its exact backward pass, and how
to describe itself for checkpointing.

Convolution accumulates one (channel, row, col) tap at a time, in a fixed
order, with the bias added last.  That makes the floating-point addition
sequence identical to the obvious triple-loop reference implementation, so
the two agree bit for bit -- which is what the conv oracle test demands.
"""

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np

__all__ = [
    "Padding",
    "ShapeError",
    "Layer",
    "Conv2d",
    "MaxPool",
    "AvgPool",
    "Dense",
    "Relu",
    "Sigmoid",
    "Softmax",
    "glorot_uniform_init",
    "layer_from_spec",
]


class Padding(str, Enum):
    SAME = "same"
    VALID = "valid"


class ShapeError(ValueError):
    pass


def glorot_uniform_init(
    shape: tuple[int, ...],
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator | int,
) -> np.ndarray:
    """Uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _pair(v: int | tuple[int, int], name: str) -> tuple[int, int]:
    pair = (v, v) if isinstance(v, int) else (int(v[0]), int(v[1]))
    if pair[0] < 1 or pair[1] < 1:
        raise ValueError(f"{name} must be positive, got {pair}")
    return pair


def _axis_geometry(size: int, f: int, s: int, padding: Padding) -> tuple[int, int, int]:
    """(out_size, pad_begin, pad_end) along one spatial axis."""
    if padding is Padding.SAME:
        out = -(-size // s)  # ceil
        total = max(0, (out - 1) * s + f - size)
        begin = total // 2
        return out, begin, total - begin
    if size < f:
        raise ShapeError(f"input size {size} smaller than filter {f} with valid padding")
    return (size - f) // s + 1, 0, 0


class Layer:
    """Common shape: forward(x) -> (y, cache); backward(cache, dy) -> (dx, grads)."""

    kind = "layer"

    def __init__(self):
        self.weights: dict[str, np.ndarray] = {}
        self.in_shape: tuple[int, ...] | None = None
        self.out_shape: tuple[int, ...] | None = None

    def build(self, in_shape: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(in_shape)
        return self.out_shape

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, cache: Any, dy: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        raise NotImplementedError

    @property
    def param_count(self) -> int:
        return sum(w.size for w in self.weights.values())

    def spec(self) -> dict:
        return {"kind": self.kind}

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.in_shape is None:
            raise ShapeError(f"{self.kind}: layer used before build")
        if x.shape[1:] != self.in_shape:
            raise ShapeError(
                f"{self.kind}: input shape {x.shape[1:]} does not match built shape {self.in_shape}"
            )
        return x


class Conv2d(Layer):
    kind = "conv2d"

    def __init__(
        self,
        n_filters: int,
        filter_size: int | tuple[int, int],
        stride: int | tuple[int, int] = (1, 1),
        padding: Padding | str = Padding.SAME,
    ):
        super().__init__()
        if n_filters < 1:
            raise ValueError("n_filters must be positive")
        self.n_filters = int(n_filters)
        self.filter_size = _pair(filter_size, "filter_size")
        self.stride = _pair(stride, "stride")
        self.padding = Padding(padding)

    def build(self, in_shape, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"conv2d expects (channels, h, w) input, got {in_shape}")
        c, h, w = in_shape
        fh, fw = self.filter_size
        sh, sw = self.stride
        oh, self._pt, self._pb = _axis_geometry(h, fh, sh, self.padding)
        ow, self._pl, self._pr = _axis_geometry(w, fw, sw, self.padding)
        fan_in = c * fh * fw
        fan_out = self.n_filters * fh * fw
        self.weights = {
            "w": glorot_uniform_init((self.n_filters, c, fh, fw), fan_in, fan_out, rng),
            "b": np.zeros(self.n_filters),
        }
        self.in_shape = tuple(in_shape)
        self.out_shape = (self.n_filters, oh, ow)
        return self.out_shape

    def _pad(self, x: np.ndarray) -> np.ndarray:
        if self._pt or self._pb or self._pl or self._pr:
            return np.pad(x, ((0, 0), (0, 0), (self._pt, self._pb), (self._pl, self._pr)))
        return x

    def forward(self, x):
        x = self._check_input(x)
        w, b = self.weights["w"], self.weights["b"]
        c_in, (fh, fw), (sh, sw) = self.in_shape[0], self.filter_size, self.stride
        _, oh, ow = self.out_shape
        xp = self._pad(x)
        out = np.zeros((x.shape[0], self.n_filters, oh, ow))
        # one tap at a time, (c, u, v) order, bias last: fixes the summation
        # order so the result is bit-identical to a scalar triple loop
        for c in range(c_in):
            for u in range(fh):
                for v in range(fw):
                    patch = xp[:, c, u : u + oh * sh : sh, v : v + ow * sw : sw]
                    out += w[:, c, u, v][None, :, None, None] * patch[:, None, :, :]
        out += b[None, :, None, None]
        return out, xp

    def backward(self, cache, dy):
        xp = cache
        w = self.weights["w"]
        c_in, (fh, fw), (sh, sw) = self.in_shape[0], self.filter_size, self.stride
        _, oh, ow = self.out_shape
        dw = np.zeros_like(w)
        db = dy.sum(axis=(0, 2, 3))
        dxp = np.zeros_like(xp)
        for c in range(c_in):
            for u in range(fh):
                for v in range(fw):
                    patch = xp[:, c, u : u + oh * sh : sh, v : v + ow * sw : sw]
                    dw[:, c, u, v] = (dy * patch[:, None, :, :]).sum(axis=(0, 2, 3))
                    dxp[:, c, u : u + oh * sh : sh, v : v + ow * sw : sw] += (
                        w[:, c, u, v][None, :, None, None] * dy
                    ).sum(axis=1)
        h, w_in = self.in_shape[1:]
        dx = dxp[:, :, self._pt : self._pt + h, self._pl : self._pl + w_in]
        return dx, {"w": dw, "b": db}

    def spec(self):
        return {
            "kind": self.kind,
            "n_filters": self.n_filters,
            "filter_size": list(self.filter_size),
            "stride": list(self.stride),
            "padding": self.padding.value,
        }


class _Pool(Layer):
    def __init__(
        self,
        filter_size: int | tuple[int, int],
        stride: int | tuple[int, int] | None = None,
        padding: Padding | str = Padding.VALID,
    ):
        super().__init__()
        self.filter_size = _pair(filter_size, "filter_size")
        self.stride = self.filter_size if stride is None else _pair(stride, "stride")
        self.padding = Padding(padding)

    def build(self, in_shape, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"{self.kind} expects (channels, h, w) input, got {in_shape}")
        c, h, w = in_shape
        fh, fw = self.filter_size
        sh, sw = self.stride
        oh, self._pt, self._pb = _axis_geometry(h, fh, sh, self.padding)
        ow, self._pl, self._pr = _axis_geometry(w, fw, sw, self.padding)
        self.in_shape = tuple(in_shape)
        self.out_shape = (c, oh, ow)
        return self.out_shape

    def _pad(self, x: np.ndarray, fill: float) -> np.ndarray:
        if self._pt or self._pb or self._pl or self._pr:
            return np.pad(
                x,
                ((0, 0), (0, 0), (self._pt, self._pb), (self._pl, self._pr)),
                constant_values=fill,
            )
        return x

    def _windows(self, xp: np.ndarray) -> np.ndarray:
        """Stack the fh*fw taps of every window along a last axis, row-major."""
        _, oh, ow = self.out_shape
        (fh, fw), (sh, sw) = self.filter_size, self.stride
        taps = [
            xp[:, :, u : u + oh * sh : sh, v : v + ow * sw : sw]
            for u in range(fh)
            for v in range(fw)
        ]
        return np.stack(taps, axis=-1)

    def _scatter(self, per_tap: np.ndarray) -> np.ndarray:
        """Inverse of _windows for gradients: add each tap plane back."""
        _, oh, ow = self.out_shape
        (fh, fw), (sh, sw) = self.filter_size, self.stride
        b = per_tap.shape[0]
        c, h, w = self.in_shape
        dxp = np.zeros((b, c, h + self._pt + self._pb, w + self._pl + self._pr))
        k = 0
        for u in range(fh):
            for v in range(fw):
                dxp[:, :, u : u + oh * sh : sh, v : v + ow * sw : sw] += per_tap[..., k]
                k += 1
        return dxp[:, :, self._pt : self._pt + h, self._pl : self._pl + w]

    def spec(self):
        return {
            "kind": self.kind,
            "filter_size": list(self.filter_size),
            "stride": list(self.stride),
            "padding": self.padding.value,
        }


class MaxPool(_Pool):
    kind = "maxpool"

    def forward(self, x):
        x = self._check_input(x)
        windows = self._windows(self._pad(x, -np.inf))
        idx = windows.argmax(axis=-1)  # first occurrence wins ties
        return np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0], idx

    def backward(self, cache, dy):
        idx = cache
        n_taps = self.filter_size[0] * self.filter_size[1]
        per_tap = (idx[..., None] == np.arange(n_taps)) * dy[..., None]
        return self._scatter(per_tap), {}


class AvgPool(_Pool):
    kind = "avgpool"

    def forward(self, x):
        x = self._check_input(x)
        # padded cells count in the average (uniform 1/(fh*fw) weights)
        windows = self._windows(self._pad(x, 0.0))
        return windows.mean(axis=-1), None

    def backward(self, cache, dy):
        n_taps = self.filter_size[0] * self.filter_size[1]
        per_tap = np.repeat(dy[..., None] / n_taps, n_taps, axis=-1)
        return self._scatter(per_tap), {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, units: int):
        super().__init__()
        if units < 1:
            raise ValueError("units must be positive")
        self.units = int(units)

    def build(self, in_shape, rng):
        d = int(np.prod(in_shape))
        self.weights = {
            "w": glorot_uniform_init((d, self.units), d, self.units, rng),
            "b": np.zeros(self.units),
        }
        self.in_shape = tuple(in_shape)
        self.out_shape = (self.units,)
        return self.out_shape

    def forward(self, x):
        x = self._check_input(x)
        flat = x.reshape(x.shape[0], -1)
        return flat @ self.weights["w"] + self.weights["b"], flat

    def backward(self, cache, dy):
        flat = cache
        dw = flat.T @ dy
        db = dy.sum(axis=0)
        dx = (dy @ self.weights["w"].T).reshape(flat.shape[0], *self.in_shape)
        return dx, {"w": dw, "b": db}

    def spec(self):
        return {"kind": self.kind, "units": self.units}


class Relu(Layer):
    kind = "relu"

    def forward(self, x):
        x = self._check_input(x)
        return np.maximum(x, 0.0), x

    def backward(self, cache, dy):
        return dy * (cache > 0), {}


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x):
        x = self._check_input(x)
        # split by sign so neither branch ever exponentiates a large positive
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        return y, y

    def backward(self, cache, dy):
        y = cache
        return dy * y * (1.0 - y), {}


class Softmax(Layer):
    kind = "softmax"

    def build(self, in_shape, rng):
        if len(in_shape) != 1:
            raise ShapeError(f"softmax expects a flat input, got {in_shape}")
        return super().build(in_shape, rng)

    def forward(self, x):
        x = self._check_input(x)
        e = np.exp(x - x.max(axis=-1, keepdims=True))
        y = e / e.sum(axis=-1, keepdims=True)
        return y, y

    def backward(self, cache, dy):
        y = cache
        inner = (dy * y).sum(axis=-1, keepdims=True)
        return y * (dy - inner), {}


_LAYER_KINDS = {
    cls.kind: cls for cls in (Conv2d, MaxPool, AvgPool, Dense, Relu, Sigmoid, Softmax)
}


def layer_from_spec(spec: dict) -> Layer:
    kind = spec.get("kind")
    if kind not in _LAYER_KINDS:
        raise ValueError(f"unknown layer kind {kind!r}")
    cls = _LAYER_KINDS[kind]
    if cls is Conv2d:
        return Conv2d(
            spec["n_filters"],
            tuple(spec["filter_size"]),
            tuple(spec["stride"]),
            spec["padding"],
        )
    if cls in (MaxPool, AvgPool):
        return cls(tuple(spec["filter_size"]), tuple(spec["stride"]), spec["padding"])
    if cls is Dense:
        return Dense(spec["units"])
    return cls()
