from __future__ import annotations

from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..errors import DimensionError, EmptyBatchError, ValidationError
from .tensor import Tensor, as_tensor

CLAMP_EPS = 1e-7


class LossKind(str, Enum):
    BINARY_CROSS_ENTROPY = "binary_crossentropy"
    MEAN_SQUARED_ERROR = "mean_squared_error"


def loss(
    predictions: Tensor,
    targets: Tensor,
    kind: LossKind,
    sample_weights: Optional[Tensor] = None,
) -> Tuple[float, Tensor]:
    """Weighted mean loss over the batch and its gradient w.r.t. the predictions.

    BCE is the negative log-likelihood, -(1/N) sum w [y log p + (1-y) log(1-p)],
    with p clamped to [1e-7, 1 - 1e-7]; its gradient is zero where the clamp is active.
    MSE is (1/N) sum w (p - y)^2.
    """
    predictions = as_tensor(predictions, "predictions").reshape(-1)
    targets = as_tensor(targets, "targets").reshape(-1)
    n = predictions.shape[0]
    if n == 0:
        raise EmptyBatchError("loss called on an empty batch")
    if targets.shape != predictions.shape:
        raise DimensionError(f"targets {targets.shape} != predictions {predictions.shape}")
    if sample_weights is None:
        weights = np.ones(n)
    else:
        weights = as_tensor(sample_weights, "sample_weights").reshape(-1)
        if weights.shape != predictions.shape:
            raise DimensionError(f"sample_weights {weights.shape} != predictions {predictions.shape}")

    kind = LossKind(kind)
    if kind == LossKind.BINARY_CROSS_ENTROPY:
        if not np.all((targets == 0.0) | (targets == 1.0)):
            raise ValidationError("binary cross-entropy targets must be 0 or 1")
        p = np.clip(predictions, CLAMP_EPS, 1.0 - CLAMP_EPS)
        per_sample = targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)
        value = -float(np.sum(weights * per_sample)) / n
        inside = (predictions >= CLAMP_EPS) & (predictions <= 1.0 - CLAMP_EPS)
        grad = -(weights / n) * (targets / p - (1.0 - targets) / (1.0 - p)) * inside
        return value, grad

    diff = predictions - targets
    value = float(np.sum(weights * diff * diff)) / n
    grad = 2.0 * weights * diff / n
    return value, grad
