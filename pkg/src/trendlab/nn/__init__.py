"""A small trainable CNN engine in plain numpy, double precision throughout.

Seven layer kinds, four losses, Glorot initialization, minibatch SGD and a
finite-difference gradient checker.  No autodiff: every backward pass is
written and verified by hand, which is the point.
"""

from .layers import (
    AvgPool,
    Conv2d,
    Dense,
    Layer,
    MaxPool,
    Padding,
    Relu,
    ShapeError,
    Sigmoid,
    Softmax,
    glorot_uniform_init,
    layer_from_spec,
)
from .losses import (
    CeSoftmax,
    FMeasure,
    Loss,
    SquaredError,
    WeightedBce,
    loss_and_grad,
)
from .network import Network
from .train import TrainConfig, TrainingDiverged, grad_check, sgd_train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AvgPool",
    "CeSoftmax",
    "Conv2d",
    "Dense",
    "FMeasure",
    "Layer",
    "Loss",
    "MaxPool",
    "Network",
    "Padding",
    "Relu",
    "ShapeError",
    "Sigmoid",
    "Softmax",
    "SquaredError",
    "TrainConfig",
    "TrainingDiverged",
    "WeightedBce",
    "glorot_uniform_init",
    "grad_check",
    "layer_from_spec",
    "load_checkpoint",
    "loss_and_grad",
    "save_checkpoint",
    "sgd_train",
]
