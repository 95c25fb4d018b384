from .layers import (
    LayerKind,
    LayerSpec,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    lstm_backward,
    lstm_forward,
    parameter_count,
    parameter_shapes,
)
from .losses import LossKind, loss
from .network import init_parameters, output_shapes, stack_backward, stack_forward
from .optim import NetworkParameters, adam_step
from .tensor import Tensor, as_tensor

__all__ = [
    "LayerKind",
    "LayerSpec",
    "LossKind",
    "NetworkParameters",
    "Tensor",
    "adam_step",
    "as_tensor",
    "conv1d_backward",
    "conv1d_forward",
    "dense_backward",
    "dense_forward",
    "init_parameters",
    "loss",
    "lstm_backward",
    "lstm_forward",
    "output_shapes",
    "parameter_count",
    "parameter_shapes",
    "stack_backward",
    "stack_forward",
]
