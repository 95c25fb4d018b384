from __future__ import annotations

from typing import Any

import numpy as np
from scipy.special import expit

from ..errors import NumericError, ValidationError

# Tensors are plain float64 ndarrays, row-major.
Tensor = np.ndarray


def as_tensor(value: Any, name: str = "tensor") -> Tensor:
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NumericError(f"{name} contains NaN or Inf values")
    return array


def activate(z: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return expit(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValidationError(f"Unknown activation '{kind}'")


def activation_grad(z: Tensor, a: Tensor, kind: str) -> Tensor:
    """Derivative of the activation at pre-activation z (a is the activated value)."""
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "linear":
        return np.ones_like(z)
    raise ValidationError(f"Unknown activation '{kind}'")
