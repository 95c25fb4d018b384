"""Central finite-difference checks for analytic gradients."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor

REL_FLOOR = 1e-6


def relative_error(analytic: float, numeric: float, floor: float = REL_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numerical_partial(f: Callable[[], float], array: Tensor, index: tuple, step: float = 1e-4) -> float:
    """d f / d array[index]; ``array`` is perturbed in place and restored."""
    original = array[index]
    array[index] = original + step
    plus = f()
    array[index] = original - step
    minus = f()
    array[index] = original
    return (plus - minus) / (2.0 * step)


def max_relative_error(
    f: Callable[[], float],
    array: Tensor,
    analytic: Tensor,
    rng: np.random.Generator,
    n_coords: int = 100,
    step: float = 1e-4,
) -> float:
    flat_count = array.size
    picks = rng.choice(flat_count, size=min(n_coords, flat_count), replace=False)
    worst = 0.0
    for flat in picks:
        index = np.unravel_index(int(flat), array.shape)
        numeric = numerical_partial(f, array, index, step)
        worst = max(worst, relative_error(float(analytic[index]), numeric))
    return worst
