"""Conv1D, LSTM and Dense layers with explicit forward caches and exact backward passes.

Every forward function accepts an optional leading batch axis and returns
``(output, cache)``; the matching backward function consumes ``(grad_out, cache)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import DimensionError, StateError, ValidationError
from .tensor import Tensor, activate, activation_grad, as_tensor


class LayerKind(str, Enum):
    CONV1D = "Conv1D"
    LSTM = "LSTM"
    DENSE = "Dense"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_features: int
    out_features: int
    kernel_width: int = 1
    activation: str = "linear"
    name: str = ""

    def __post_init__(self) -> None:
        if self.in_features < 1 or self.out_features < 1 or self.kernel_width < 1:
            raise ValidationError(f"Invalid layer sizes in {self}")


def parameter_shapes(spec: LayerSpec) -> Dict[str, Tuple[int, ...]]:
    c_in, c_out = spec.in_features, spec.out_features
    if spec.kind == LayerKind.CONV1D:
        return {"kernel": (spec.kernel_width, c_in, c_out), "bias": (c_out,)}
    if spec.kind == LayerKind.LSTM:
        return {
            "kernel": (c_in, 4 * c_out),
            "recurrent_kernel": (c_out, 4 * c_out),
            "bias": (4 * c_out,),
        }
    if spec.kind == LayerKind.DENSE:
        return {"kernel": (c_in, c_out), "bias": (c_out,)}
    raise ValidationError(f"Unknown layer kind {spec.kind}")


def parameter_count(spec: LayerSpec) -> int:
    return int(sum(np.prod(shape) for shape in parameter_shapes(spec).values()))


def _require_cache(cache, layer: str):
    if cache is None:
        raise StateError(f"{layer} backward called without a forward cache")
    return cache


def _batched(x: Tensor, ndim: int, name: str) -> Tuple[Tensor, bool]:
    if x.ndim == ndim - 1:
        return x[None], True
    if x.ndim != ndim:
        raise DimensionError(f"{name} expects {ndim - 1}D or {ndim}D input, got shape {x.shape}")
    return x, False


# Conv1D --------------------------------------------------------------------


@dataclass
class Conv1DCache:
    cols: Tensor
    weights: Tensor
    z: Tensor
    out: Tensor
    activation: str
    pad_left: int
    squeeze: bool


def conv1d_forward(
    x: Tensor, weights: Tensor, bias: Tensor, activation: str = "linear"
) -> Tuple[Tensor, Conv1DCache]:
    x = as_tensor(x, "conv1d input")
    weights = as_tensor(weights, "conv1d kernel")
    bias = as_tensor(bias, "conv1d bias")
    x, squeeze = _batched(x, 3, "conv1d")
    n, t, c_in = x.shape
    if t < 1:
        raise DimensionError("conv1d input needs at least one timestep")
    if weights.ndim != 3 or weights.shape[1] != c_in:
        raise DimensionError(f"conv1d kernel {weights.shape} does not match {c_in} input channels")
    k, _, c_out = weights.shape
    if bias.shape != (c_out,):
        raise DimensionError(f"conv1d bias {bias.shape} does not match {c_out} filters")

    # "same" padding: floor((K-1)/2) left, the rest right.
    pad_left = (k - 1) // 2
    padded = np.pad(x, ((0, 0), (pad_left, k - 1 - pad_left), (0, 0)))
    windows = sliding_window_view(padded, k, axis=1)  # [n, t, c_in, k]
    cols = windows.transpose(0, 1, 3, 2).reshape(n * t, k * c_in)
    z = (cols @ weights.reshape(k * c_in, c_out) + bias).reshape(n, t, c_out)
    out = activate(z, activation)
    cache = Conv1DCache(cols, weights, z, out, activation, pad_left, squeeze)
    return (out[0] if squeeze else out), cache


def conv1d_backward(
    grad_out: Tensor, cache: Optional[Conv1DCache]
) -> Tuple[Tensor, Tensor, Tensor]:
    cache = _require_cache(cache, "conv1d")
    grad_out = as_tensor(grad_out, "conv1d grad_out")
    if cache.squeeze:
        grad_out = grad_out[None]
    if grad_out.shape != cache.z.shape:
        raise DimensionError(f"conv1d grad_out {grad_out.shape} != output {cache.z.shape}")
    n, t, c_out = cache.z.shape
    k, c_in, _ = cache.weights.shape

    dz = (grad_out * activation_grad(cache.z, cache.out, cache.activation)).reshape(n * t, c_out)
    grad_weights = (cache.cols.T @ dz).reshape(k, c_in, c_out)
    grad_bias = dz.sum(axis=0)
    dcols = (dz @ cache.weights.reshape(k * c_in, c_out).T).reshape(n, t, k, c_in)
    dpadded = np.zeros((n, t + k - 1, c_in))
    for j in range(k):
        dpadded[:, j : j + t, :] += dcols[:, :, j, :]
    grad_input = dpadded[:, cache.pad_left : cache.pad_left + t, :]
    if cache.squeeze:
        grad_input = grad_input[0]
    return grad_input, grad_weights, grad_bias


# LSTM ----------------------------------------------------------------------


@dataclass
class LSTMCache:
    x: Tensor
    kernel: Tensor
    recurrent_kernel: Tensor
    hs: Tensor
    cs: Tensor
    gates: Tensor
    tanh_c: Tensor
    squeeze: bool


def lstm_forward(
    x: Tensor, kernel: Tensor, recurrent_kernel: Tensor, bias: Tensor
) -> Tuple[Tensor, LSTMCache]:
    """Run the sequence and return only the final hidden state h_T (h_0 = c_0 = 0)."""
    x = as_tensor(x, "lstm input")
    kernel = as_tensor(kernel, "lstm kernel")
    recurrent_kernel = as_tensor(recurrent_kernel, "lstm recurrent_kernel")
    bias = as_tensor(bias, "lstm bias")
    x, squeeze = _batched(x, 3, "lstm")
    n, t, c_in = x.shape
    if t < 1:
        raise DimensionError("lstm input needs at least one timestep")
    if recurrent_kernel.ndim != 2 or recurrent_kernel.shape[1] != 4 * recurrent_kernel.shape[0]:
        raise DimensionError(f"lstm recurrent_kernel has shape {recurrent_kernel.shape}")
    h = recurrent_kernel.shape[0]
    if kernel.shape != (c_in, 4 * h) or bias.shape != (4 * h,):
        raise DimensionError(
            f"lstm kernel {kernel.shape} / bias {bias.shape} do not match input {c_in}, units {h}"
        )

    xw = x @ kernel + bias
    hs = np.zeros((n, t + 1, h))
    cs = np.zeros((n, t + 1, h))
    gates = np.empty((n, t, 4 * h))
    tanh_c = np.empty((n, t, h))
    for step in range(t):
        z = xw[:, step] + hs[:, step] @ recurrent_kernel
        gate = expit(z)
        gate[:, 2 * h : 3 * h] = np.tanh(z[:, 2 * h : 3 * h])
        i, f, g, o = gate[:, :h], gate[:, h : 2 * h], gate[:, 2 * h : 3 * h], gate[:, 3 * h :]
        c = f * cs[:, step] + i * g
        tc = np.tanh(c)
        cs[:, step + 1] = c
        hs[:, step + 1] = o * tc
        gates[:, step] = gate
        tanh_c[:, step] = tc

    cache = LSTMCache(x, kernel, recurrent_kernel, hs, cs, gates, tanh_c, squeeze)
    h_last = hs[:, t]
    return (h_last[0] if squeeze else h_last.copy()), cache


def lstm_backward(
    grad_h_last: Tensor, cache: Optional[LSTMCache]
) -> Tuple[Tensor, Dict[str, Tensor]]:
    """Backpropagation through time from dL/dh_T."""
    cache = _require_cache(cache, "lstm")
    dh = as_tensor(grad_h_last, "lstm grad_out")
    if cache.squeeze:
        dh = dh[None]
    n, t, c_in = cache.x.shape
    h = cache.recurrent_kernel.shape[0]
    if dh.shape != (n, h):
        raise DimensionError(f"lstm grad_out {dh.shape} != ({n}, {h})")

    dh = dh.copy()
    dc = np.zeros((n, h))
    dz = np.empty((n, t, 4 * h))
    u_t = cache.recurrent_kernel.T
    for step in reversed(range(t)):
        gate = cache.gates[:, step]
        i, f, g, o = gate[:, :h], gate[:, h : 2 * h], gate[:, 2 * h : 3 * h], gate[:, 3 * h :]
        tc = cache.tanh_c[:, step]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz[:, step, :h] = dc * g * i * (1.0 - i)
        dz[:, step, h : 2 * h] = dc * cache.cs[:, step] * f * (1.0 - f)
        dz[:, step, 2 * h : 3 * h] = dc * i * (1.0 - g * g)
        dz[:, step, 3 * h :] = do * o * (1.0 - o)
        dh = dz[:, step] @ u_t
        dc = dc * f

    dz_flat = dz.reshape(n * t, 4 * h)
    grads = {
        "kernel": cache.x.reshape(n * t, c_in).T @ dz_flat,
        "recurrent_kernel": cache.hs[:, :t].reshape(n * t, h).T @ dz_flat,
        "bias": dz_flat.sum(axis=0),
    }
    grad_input = dz @ cache.kernel.T
    if cache.squeeze:
        grad_input = grad_input[0]
    return grad_input, grads


# Dense ---------------------------------------------------------------------


@dataclass
class DenseCache:
    x: Tensor
    weights: Tensor
    z: Tensor
    out: Tensor
    activation: str
    squeeze: bool


def dense_forward(
    x: Tensor, weights: Tensor, bias: Tensor, activation: str = "linear"
) -> Tuple[Tensor, DenseCache]:
    x = as_tensor(x, "dense input")
    weights = as_tensor(weights, "dense kernel")
    bias = as_tensor(bias, "dense bias")
    x, squeeze = _batched(x, 2, "dense")
    if weights.ndim != 2 or weights.shape[0] != x.shape[1]:
        raise DimensionError(f"dense kernel {weights.shape} does not match input {x.shape}")
    if bias.shape != (weights.shape[1],):
        raise DimensionError(f"dense bias {bias.shape} does not match kernel {weights.shape}")
    z = x @ weights + bias
    out = activate(z, activation)
    cache = DenseCache(x, weights, z, out, activation, squeeze)
    return (out[0] if squeeze else out), cache


def dense_backward(
    grad_out: Tensor, cache: Optional[DenseCache]
) -> Tuple[Tensor, Tensor, Tensor]:
    cache = _require_cache(cache, "dense")
    grad_out = as_tensor(grad_out, "dense grad_out")
    if cache.squeeze:
        grad_out = grad_out[None]
    if grad_out.shape != cache.z.shape:
        raise DimensionError(f"dense grad_out {grad_out.shape} != output {cache.z.shape}")
    dz = grad_out * activation_grad(cache.z, cache.out, cache.activation)
    grad_weights = cache.x.T @ dz
    grad_bias = dz.sum(axis=0)
    grad_input = dz @ cache.weights.T
    if cache.squeeze:
        grad_input = grad_input[0]
    return grad_input, grad_weights, grad_bias
