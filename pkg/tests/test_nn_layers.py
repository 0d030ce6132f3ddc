"""Layer-level tests: bit-exact convolution against a scalar reference,
hand-computed pooling, finite-difference gradients per layer kind."""

import numpy as np
import pytest

from trendlab.nn import (
    AvgPool,
    Conv2d,
    Dense,
    MaxPool,
    Padding,
    Relu,
    ShapeError,
    Sigmoid,
    Softmax,
    glorot_uniform_init,
    layer_from_spec,
)

from oracles import finite_diff, naive_conv2d, naive_pool, same_pads


def built(layer, in_shape, seed=0):
    layer.build(in_shape, np.random.default_rng(seed))
    return layer


def randomize(layer, rng):
    for name in layer.weights:
        layer.weights[name] = rng.standard_normal(layer.weights[name].shape)
    return layer


# ---------------------------------------------------------------------------
# convolution: bit-exact against the scalar loop


@pytest.mark.parametrize(
    "in_shape,k,f,s,pad",
    [
        ((1, 5, 5), 1, (3, 3), (1, 1), "same"),
        ((3, 8, 10), 4, (3, 3), (2, 2), "same"),
        ((3, 48, 64), 2, (25, 25), (5, 5), "valid"),
        ((2, 7, 7), 3, (2, 4), (3, 2), "same"),
        ((2, 9, 6), 2, (4, 3), (2, 3), "valid"),
    ],
)
def test_conv_bit_exact_fixed_cases(in_shape, k, f, s, pad, rng):
    layer = built(Conv2d(k, f, s, pad), in_shape)
    randomize(layer, rng)
    x = rng.standard_normal((2, *in_shape))
    got, _ = layer.forward(x)
    want = naive_conv2d(x, layer.weights["w"], layer.weights["b"], s, pad)
    assert got.shape == want.shape
    assert np.array_equal(got, want)  # bit-exact, no tolerance


def test_conv_bit_exact_randomized(rng):
    for _ in range(30):
        c = int(rng.integers(1, 4))
        h = int(rng.integers(3, 13))
        w = int(rng.integers(3, 13))
        fh = int(rng.integers(1, 6))
        fw = int(rng.integers(1, 6))
        s = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        pad = "same" if rng.random() < 0.5 or fh > h or fw > w else "valid"
        k = int(rng.integers(1, 5))
        layer = built(Conv2d(k, (fh, fw), s, pad), (c, h, w))
        randomize(layer, rng)
        x = rng.standard_normal((int(rng.integers(1, 4)), c, h, w))
        got, _ = layer.forward(x)
        want = naive_conv2d(x, layer.weights["w"], layer.weights["b"], s, pad)
        assert np.array_equal(got, want)


def test_identity_kernel_reproduces_input(rng):
    layer = built(Conv2d(1, (1, 1), (1, 1), "valid"), (1, 6, 6))
    layer.weights["w"] = np.ones((1, 1, 1, 1))
    layer.weights["b"] = np.zeros(1)
    x = rng.standard_normal((3, 1, 6, 6))
    y, _ = layer.forward(x)
    assert np.array_equal(y, x)


def test_centered_3x3_identity_same_padding(rng):
    layer = built(Conv2d(1, (3, 3), (1, 1), "same"), (1, 5, 5))
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    layer.weights["w"] = w
    layer.weights["b"] = np.zeros(1)
    x = rng.standard_normal((2, 1, 5, 5))
    y, _ = layer.forward(x)
    assert np.array_equal(y, x)


# ---------------------------------------------------------------------------
# shape geometry


def test_output_shape_valid_table():
    layer = built(Conv2d(8, (25, 25), (5, 5), "valid"), (3, 48, 64))
    assert layer.out_shape == (8, 5, 8)


def test_output_shape_same_is_ceil():
    layer = built(Conv2d(8, (5, 5), (2, 2), "same"), (3, 48, 64))
    assert layer.out_shape == (8, 24, 32)
    layer = built(Conv2d(4, (3, 3), (5, 7), "same"), (1, 11, 12))
    assert layer.out_shape == (4, -(-11 // 5), -(-12 // 7))


def test_same_padding_split():
    # odd total padding goes by floor to the leading edge
    out, begin, end = same_pads(5, 4, 2)
    assert (out, begin, end) == (3, 1, 2)
    layer = built(Conv2d(1, (4, 4), (2, 2), "same"), (1, 5, 5))
    assert (layer._pt, layer._pb) == (1, 2)


def test_valid_padding_requires_input_at_least_filter():
    with pytest.raises(ShapeError, match="smaller than filter"):
        built(Conv2d(1, (5, 5), (1, 1), "valid"), (1, 4, 10))


def test_conv_rejects_non_image_input():
    with pytest.raises(ShapeError, match="channels, h, w"):
        built(Conv2d(1, (2, 2)), (10,))


def test_forward_checks_built_shape(rng):
    layer = built(Conv2d(1, (2, 2)), (1, 4, 4))
    with pytest.raises(ShapeError, match="does not match built shape"):
        layer.forward(rng.standard_normal((1, 1, 5, 5)))
    with pytest.raises(ShapeError, match="before build"):
        Relu().forward(rng.standard_normal((1, 3)))


# ---------------------------------------------------------------------------
# pooling


def test_maxpool_hand_case():
    x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
    layer = built(MaxPool((2, 2)), (1, 4, 4))
    y, _ = layer.forward(x)
    assert np.array_equal(y[0, 0], [[5, 7], [13, 15]])


def test_pool_matches_naive_randomized(rng):
    for mode, cls in [("max", MaxPool), ("avg", AvgPool)]:
        for _ in range(10):
            c = int(rng.integers(1, 3))
            h = int(rng.integers(3, 10))
            w = int(rng.integers(3, 10))
            f = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
            s = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
            pad = "same" if rng.random() < 0.5 else "valid"
            if pad == "valid" and (f[0] > h or f[1] > w):
                pad = "same"
            layer = built(cls(f, s, pad), (c, h, w))
            x = rng.standard_normal((2, c, h, w))
            y, _ = layer.forward(x)
            assert np.array_equal(y, naive_pool(x, f, s, pad, mode))


def test_avgpool_same_padding_counts_padded_zeros():
    x = np.full((1, 1, 3, 3), 4.0)
    layer = built(AvgPool((2, 2), (2, 2), "same"), (1, 3, 3))
    y, _ = layer.forward(x)
    # corner windows hang over the edge; padded cells contribute zeros
    assert np.array_equal(y[0, 0], [[4.0, 2.0], [2.0, 1.0]])


def test_maxpool_tie_routes_gradient_to_first():
    x = np.array([[[[2.0, 2.0]]]])
    layer = built(MaxPool((1, 2)), (1, 1, 2))
    y, cache = layer.forward(x)
    assert y[0, 0, 0, 0] == 2.0
    dx, _ = layer.backward(cache, np.ones_like(y))
    assert np.array_equal(dx[0, 0, 0], [1.0, 0.0])


def test_pool_default_stride_equals_filter():
    layer = MaxPool((3, 2))
    assert layer.stride == (3, 2)


# ---------------------------------------------------------------------------
# dense and activations


def test_dense_is_flattened_matmul(rng):
    layer = built(Dense(4), (2, 3))
    randomize(layer, rng)
    x = rng.standard_normal((5, 2, 3))
    y, _ = layer.forward(x)
    want = x.reshape(5, 6) @ layer.weights["w"] + layer.weights["b"]
    assert np.array_equal(y, want)
    assert layer.param_count == 6 * 4 + 4


def test_relu_values():
    layer = built(Relu(), (4,))
    y, _ = layer.forward(np.array([[-2.0, -0.0, 0.5, 3.0]]))
    assert np.array_equal(y, [[0.0, 0.0, 0.5, 3.0]])


def test_sigmoid_values_and_stability():
    layer = built(Sigmoid(), (3,))
    y, _ = layer.forward(np.array([[0.0, 800.0, -800.0]]))
    assert y[0, 0] == 0.5
    assert y[0, 1] == 1.0 and y[0, 2] == 0.0  # saturates without overflow warnings
    assert np.all(np.isfinite(y))


def test_softmax_values():
    layer = built(Softmax(), (3,))
    y, _ = layer.forward(np.array([[1.0, 1.0, 1.0], [1000.0, 1000.0, 999.0]]))
    assert np.allclose(y[0], [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(y.sum(axis=1), 1.0)
    # shift invariance
    z, _ = layer.forward(np.array([[1.0, 2.0, 3.0]]))
    z2, _ = layer.forward(np.array([[11.0, 12.0, 13.0]]))
    assert np.allclose(z, z2)


def test_softmax_requires_flat_input():
    with pytest.raises(ShapeError, match="flat"):
        built(Softmax(), (3, 4))


# ---------------------------------------------------------------------------
# gradients: central differences per layer kind


@pytest.mark.parametrize(
    "make,in_shape",
    [
        (lambda: Conv2d(2, (3, 3), (2, 2), "same"), (2, 5, 6)),
        (lambda: Conv2d(2, (2, 2), (1, 1), "valid"), (1, 4, 4)),
        (lambda: MaxPool((2, 2), (2, 2), "same"), (1, 5, 5)),
        (lambda: AvgPool((2, 2), (1, 1), "valid"), (1, 4, 4)),
        (lambda: Dense(3), (2, 2)),
        (lambda: Relu(), (6,)),
        (lambda: Sigmoid(), (6,)),
        (lambda: Softmax(), (4,)),
    ],
)
def test_backward_matches_finite_differences(make, in_shape, rng):
    layer = built(make(), in_shape, seed=7)
    randomize(layer, rng)
    x = rng.standard_normal((3, *in_shape)) + 0.05  # keep relu kinks away from 0
    r = rng.standard_normal(layer.forward(x)[0].shape)

    y, cache = layer.forward(x)
    dx, grads = layer.backward(cache, r)

    num_dx = finite_diff(lambda t: float((layer.forward(t)[0] * r).sum()), x.copy())
    assert np.allclose(dx, num_dx, rtol=1e-6, atol=1e-8)

    for name, analytic in grads.items():
        w0 = layer.weights[name]

        def f(wv, _name=name):
            layer.weights[_name] = wv
            out = float((layer.forward(x)[0] * r).sum())
            return out

        num_dw = finite_diff(f, w0.copy())
        layer.weights[name] = w0
        assert np.allclose(analytic, num_dw, rtol=1e-6, atol=1e-8), name


# ---------------------------------------------------------------------------
# init and specs


def test_glorot_bounds_and_determinism():
    w1 = glorot_uniform_init((50, 40), 50, 40, 3)
    w2 = glorot_uniform_init((50, 40), 50, 40, 3)
    limit = np.sqrt(6.0 / 90)
    assert np.array_equal(w1, w2)
    assert np.abs(w1).max() <= limit
    assert np.abs(w1).max() > 0.8 * limit  # actually fills the range
    with pytest.raises(ValueError, match="fans"):
        glorot_uniform_init((2, 2), 0, 4, 0)


def test_biases_start_at_zero():
    conv = built(Conv2d(4, (3, 3)), (1, 8, 8))
    dense = built(Dense(5), (10,))
    assert np.array_equal(conv.weights["b"], np.zeros(4))
    assert np.array_equal(dense.weights["b"], np.zeros(5))


def test_spec_round_trip():
    layers = [
        Conv2d(4, (3, 5), (2, 1), "valid"),
        MaxPool((2, 2), (1, 1), "same"),
        AvgPool((3, 3)),
        Dense(7),
        Relu(),
        Sigmoid(),
        Softmax(),
    ]
    for layer in layers:
        clone = layer_from_spec(layer.spec())
        assert clone.spec() == layer.spec()
    with pytest.raises(ValueError, match="unknown layer kind"):
        layer_from_spec({"kind": "deconv"})


def test_constructor_validation():
    with pytest.raises(ValueError):
        Conv2d(0, (3, 3))
    with pytest.raises(ValueError):
        Conv2d(1, (0, 3))
    with pytest.raises(ValueError):
        Dense(0)
    with pytest.raises(ValueError):
        Conv2d(1, (3, 3), (1, 0))
    with pytest.raises(ValueError):
        Conv2d(1, (3, 3), padding="reflect")
