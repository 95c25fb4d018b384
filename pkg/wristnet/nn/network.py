from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, StateError
from .layers import (
    LayerKind,
    LayerSpec,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    lstm_backward,
    lstm_forward,
    parameter_shapes,
)
from .optim import NetworkParameters
from .tensor import Tensor


def layer_name(spec: LayerSpec, index: int) -> str:
    return spec.name or f"layer_{index}"


def _fans(spec: LayerSpec, shape: Tuple[int, ...]) -> Tuple[int, int]:
    if spec.kind == LayerKind.CONV1D:
        k, c_in, c_out = shape
        return k * c_in, k * c_out
    return shape[0], shape[1]


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_parameters(layers: Sequence[LayerSpec], seed: int) -> NetworkParameters:
    """Glorot-uniform kernels, zero biases, LSTM forget-gate bias 1.0."""
    rng = np.random.default_rng(seed)
    values: Dict[str, Tensor] = {}
    for index, spec in enumerate(layers):
        name = layer_name(spec, index)
        for key, shape in parameter_shapes(spec).items():
            if key == "bias":
                bias = np.zeros(shape)
                if spec.kind == LayerKind.LSTM:
                    units = spec.out_features
                    bias[units : 2 * units] = 1.0
                values[f"{name}/{key}"] = bias
            else:
                fan_in, fan_out = _fans(spec, shape)
                values[f"{name}/{key}"] = glorot_uniform(rng, shape, fan_in, fan_out)
    return NetworkParameters(values=values)


def output_shapes(layers: Sequence[LayerSpec], input_shape: Tuple[int, ...]) -> List[Tuple[int, ...]]:
    shapes: List[Tuple[int, ...]] = []
    shape = tuple(input_shape)
    for index, spec in enumerate(layers):
        name = layer_name(spec, index)
        if spec.kind in (LayerKind.CONV1D, LayerKind.LSTM):
            if len(shape) != 2 or shape[1] != spec.in_features:
                raise DimensionError(f"{name} expects (T, {spec.in_features}), got {shape}")
            shape = (shape[0], spec.out_features) if spec.kind == LayerKind.CONV1D else (spec.out_features,)
        else:
            if len(shape) != 1 or shape[0] != spec.in_features:
                raise DimensionError(f"{name} expects ({spec.in_features},), got {shape}")
            shape = (spec.out_features,)
        shapes.append(shape)
    return shapes


def stack_forward(
    layers: Sequence[LayerSpec], params: NetworkParameters, x: Tensor
) -> Tuple[Tensor, list]:
    out = x
    caches = []
    for index, spec in enumerate(layers):
        name = layer_name(spec, index)
        if spec.kind == LayerKind.CONV1D:
            out, cache = conv1d_forward(out, params[f"{name}/kernel"], params[f"{name}/bias"], spec.activation)
        elif spec.kind == LayerKind.LSTM:
            out, cache = lstm_forward(
                out,
                params[f"{name}/kernel"],
                params[f"{name}/recurrent_kernel"],
                params[f"{name}/bias"],
            )
        else:
            out, cache = dense_forward(out, params[f"{name}/kernel"], params[f"{name}/bias"], spec.activation)
        caches.append(cache)
    return out, caches


def stack_backward(
    layers: Sequence[LayerSpec], grad_out: Tensor, caches: list
) -> Tuple[Tensor, Dict[str, Tensor]]:
    if caches is None or len(caches) != len(layers):
        raise StateError("stack_backward needs the caches of a matching stack_forward call")
    grads: Dict[str, Tensor] = {}
    grad = grad_out
    for index in reversed(range(len(layers))):
        spec, cache = layers[index], caches[index]
        name = layer_name(spec, index)
        if spec.kind == LayerKind.CONV1D:
            grad, grad_w, grad_b = conv1d_backward(grad, cache)
            grads[f"{name}/kernel"], grads[f"{name}/bias"] = grad_w, grad_b
        elif spec.kind == LayerKind.LSTM:
            grad, lstm_grads = lstm_backward(grad, cache)
            for key, value in lstm_grads.items():
                grads[f"{name}/{key}"] = value
        else:
            grad, grad_w, grad_b = dense_backward(grad, cache)
            grads[f"{name}/kernel"], grads[f"{name}/bias"] = grad_w, grad_b
    ordered: Dict[str, Tensor] = {}
    for index, spec in enumerate(layers):
        name = layer_name(spec, index)
        for key in parameter_shapes(spec):
            ordered[f"{name}/{key}"] = grads[f"{name}/{key}"]
    return grad, ordered
