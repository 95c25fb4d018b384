from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping

import numpy as np

from ..errors import DimensionError, NumericError, ValidationError
from .tensor import Tensor


@dataclass
class NetworkParameters:
    """Named trainable tensors (layer order preserved) plus Adam moment state."""

    values: Dict[str, Tensor]
    m: Dict[str, Tensor] = field(default_factory=dict)
    v: Dict[str, Tensor] = field(default_factory=dict)
    t: int = 0

    def __post_init__(self) -> None:
        for name, value in self.values.items():
            self.m.setdefault(name, np.zeros_like(value))
            self.v.setdefault(name, np.zeros_like(value))
            if self.m[name].shape != value.shape or self.v[name].shape != value.shape:
                raise DimensionError(f"Adam moments for '{name}' do not match {value.shape}")

    def __getitem__(self, name: str) -> Tensor:
        return self.values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def names(self) -> List[str]:
        return list(self.values)

    def count(self) -> int:
        return int(sum(value.size for value in self.values.values()))

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            values={k: v.copy() for k, v in self.values.items()},
            m={k: v.copy() for k, v in self.m.items()},
            v={k: v.copy() for k, v in self.v.items()},
            t=self.t,
        )


def adam_step(
    params: NetworkParameters,
    grads: Mapping[str, Tensor],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-7,
) -> NetworkParameters:
    """One Adam update; returns new parameters and leaves ``params`` untouched."""
    if lr <= 0 or eps <= 0:
        raise ValidationError("Adam lr and eps must be positive")
    if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
        raise ValidationError("Adam beta1 and beta2 must lie in (0, 1)")
    if params.t < 0:
        raise ValidationError("Adam step counter must be >= 0")
    missing = [name for name in params.values if name not in grads]
    if missing:
        raise DimensionError(f"Missing gradients for: {', '.join(missing)}")
    bad = [name for name in params.values if not np.all(np.isfinite(grads[name]))]
    if bad:
        raise NumericError(f"Non-finite gradients at step {params.t + 1} in: {', '.join(bad)}")

    t = params.t + 1
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    values: Dict[str, Tensor] = {}
    m: Dict[str, Tensor] = {}
    v: Dict[str, Tensor] = {}
    for name, value in params.values.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise DimensionError(f"Gradient for '{name}' has shape {g.shape}, expected {value.shape}")
        m[name] = beta1 * params.m[name] + (1.0 - beta1) * g
        v[name] = beta2 * params.v[name] + (1.0 - beta2) * (g * g)
        m_hat = m[name] / correction1
        v_hat = v[name] / correction2
        values[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
    return NetworkParameters(values=values, m=m, v=v, t=t)
