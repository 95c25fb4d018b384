from typing import Dict, List, Sequence, Tuple

import numpy as np
import pytest

from wristnet.activities import default_activity_table
from wristnet.config import SynthSpec
from wristnet.preprocess import WindowSample

CLASS_ACTIVITIES = {"sedentary": "COMPUTER WORK", "locomotion": "LEISURE WALK", "lifestyle": "SWEEPING"}
# (frequency Hz, amplitude g) per class
CLASS_SIGNALS: Dict[str, Tuple[float, float]] = {
    "sedentary": (0.25, 0.05),
    "locomotion": (2.0, 0.8),
    "lifestyle": (4.5, 0.4),
}


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    # setenv first so whatever the code under test exports is undone afterwards.
    for name in ("WRISTNET_CONFIG", "WRISTNET_ACTIVITIES"):
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def table():
    return default_activity_table()


def make_window(rng: np.random.Generator, freq: float, amp: float, noise_sd: float = 0.01) -> np.ndarray:
    t = np.arange(450) / 30.0
    phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
    values = amp * np.array([1.0, 0.5, 0.3]) * np.sin(2.0 * np.pi * freq * t[:, None] + phases)
    values[:, 2] += 1.0
    return values + rng.normal(0.0, noise_sd, size=values.shape)


def make_windows(
    participants: Sequence[str],
    per_class: int,
    classes: Sequence[str] = ("sedentary", "locomotion"),
    seed: int = 0,
) -> List[WindowSample]:
    """Class-separable 30 Hz windows with MET = 1 + 6 * amplitude."""
    rng = np.random.default_rng(seed)
    table = default_activity_table()
    windows = []
    for pid in participants:
        for cls in classes:
            name = CLASS_ACTIVITIES[cls]
            freq, amp = CLASS_SIGNALS[cls]
            for _ in range(per_class):
                scale = 1.0 + rng.uniform(-0.2, 0.2)
                windows.append(
                    WindowSample(
                        values=make_window(rng, freq, amp * scale),
                        labels=table.lookup(name).flags,
                        met=1.0 + 6.0 * amp * scale,
                        participant_id=pid,
                        source_activity=name,
                    )
                )
    return windows


@pytest.fixture
def small_spec():
    return SynthSpec(n_participants=3, bout_seconds=30.0, seed=7)
