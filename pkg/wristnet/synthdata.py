"""Seeded synthetic participants with frequency-separable activity classes.

Each class draws its dominant frequency from a disjoint band; MET is an affine,
clipped function of the bout amplitude and the VO2 series is built so the
steady-state conversion recovers it.
"""
from __future__ import annotations

import json
import logging
import os
import re
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .activities import ActivityTable, default_activity_table
from .config import ClassBand, SynthSpec
from .errors import ValidationError
from .nn.tensor import Tensor
from .preprocess import (
    MANIFEST_VERSION,
    ActivityBout,
    Demographics,
    ParticipantRecord,
    write_signal_csv,
    write_vo2_csv,
)

logger = logging.getLogger("wristnet.synthdata")

REST_VO2 = 3.5
VO2_RAMP_S = 60.0
BREATH_INTERVAL_S = 3.0
BROADBAND_TONES = 4
# Relative amplitude on the x, y, z axes; z additionally carries 1 g of gravity.
AXIS_GAIN = np.array([1.0, 0.5, 0.3])


def _active_bands(spec: SynthSpec) -> Dict[str, ClassBand]:
    bands = {"sedentary": spec.sedentary, "locomotion": spec.locomotion, "lifestyle": spec.lifestyle}
    if spec.regression_only_bouts:
        bands["regression_only"] = spec.regression_only
    return bands


def check_bands(spec: SynthSpec) -> None:
    ordered = sorted(_active_bands(spec).items(), key=lambda item: item[1].low_hz)
    for (name_a, band_a), (name_b, band_b) in zip(ordered, ordered[1:]):
        if band_b.low_hz <= band_a.high_hz:
            raise ValidationError(
                f"Frequency bands overlap: {name_a} {band_a.low_hz}-{band_a.high_hz} Hz and "
                f"{name_b} {band_b.low_hz}-{band_b.high_hz} Hz"
            )
    nyquist = 30.0 / 2.0
    for name, band in ordered:
        if band.high_hz >= nyquist:
            raise ValidationError(f"{name} band reaches {band.high_hz} Hz, above the 30 Hz Nyquist limit")


def met_for_amplitude(spec: SynthSpec, amplitude_g: float) -> float:
    return float(np.clip(spec.met_intercept + spec.met_slope * amplitude_g, spec.met_min, spec.met_max))


def _bout_signal(
    rng: np.random.Generator, band: ClassBand, amplitude: float, n: int, rate_hz: float, noise_sd: float
) -> Tensor:
    t = np.arange(n) / rate_hz
    tones = BROADBAND_TONES if band.broadband else 1
    signal = np.zeros((n, 3))
    for _ in range(tones):
        freq = rng.uniform(band.low_hz, band.high_hz)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
        wave = np.sin(2.0 * np.pi * freq * t[:, None] + phases[None, :])
        signal += (amplitude / np.sqrt(tones)) * AXIS_GAIN[None, :] * wave
    signal[:, 2] += 1.0
    if noise_sd > 0:
        signal += rng.normal(0.0, noise_sd, size=(n, 3))
    return signal


def vo2_series(met: float, start_s: float, duration_s: float) -> Tensor:
    """Breath-by-breath VO2: ramps from rest to MET * 3.5 within 60 s, then constant."""
    times = start_s + np.arange(0.0, duration_s + BREATH_INTERVAL_S / 2, BREATH_INTERVAL_S)
    target = met * REST_VO2
    progress = np.minimum(1.0, (times - start_s) / VO2_RAMP_S)
    return np.column_stack([times, REST_VO2 + (target - REST_VO2) * progress])


def _activities_by_class(table: ActivityTable) -> Dict[str, List[str]]:
    groups: Dict[str, List[str]] = {"sedentary": [], "locomotion": [], "lifestyle": [], "regression_only": []}
    for name, activity in table.activities.items():
        if activity.regression_only:
            groups["regression_only"].append(name)
            continue
        for flag, value in zip(("sedentary", "locomotion", "lifestyle"), activity.flags.as_tuple()):
            if value:
                groups[flag].append(name)
    return groups


def generate(spec: SynthSpec, table: Optional[ActivityTable] = None) -> List[ParticipantRecord]:
    check_bands(spec)
    if spec.vo2_seconds < 240.0:
        raise ValidationError("synth.vo2_seconds must cover the 240 s steady-state window")
    table = table or default_activity_table()
    groups = _activities_by_class(table)
    bands = _active_bands(spec)
    records: List[ParticipantRecord] = []
    for p in range(spec.n_participants):
        rng = np.random.default_rng([spec.seed, p])
        rate = float(spec.sample_rates_hz[p % len(spec.sample_rates_hz)])
        n = int(round(spec.bout_seconds * rate))
        plan: List[Tuple[str, int]] = [
            (cls, b) for cls in ("sedentary", "locomotion", "lifestyle") for b in range(spec.bouts_per_class)
        ]
        plan += [("regression_only", b) for b in range(spec.regression_only_bouts)]
        bouts: List[ActivityBout] = []
        start_s = 0.0
        for cls, b in plan:
            names = groups[cls]
            name = names[(p + b) % len(names)]
            amplitude = bands[cls].amplitude_g * (1.0 + rng.uniform(-spec.amplitude_jitter, spec.amplitude_jitter))
            met = met_for_amplitude(spec, amplitude)
            bouts.append(
                ActivityBout(
                    activity_name=name,
                    sample_rate_hz=rate,
                    samples=_bout_signal(rng, bands[cls], amplitude, n, rate, spec.noise_sd),
                    class_flags=table.lookup(name).flags,
                    vo2_series=vo2_series(met, start_s, spec.vo2_seconds),
                    start_s=start_s,
                    met=met,
                )
            )
            start_s += max(spec.bout_seconds, spec.vo2_seconds) + spec.gap_seconds
        demographics = Demographics(
            age=float(rng.integers(40, 81)),
            sex=str(rng.choice(["F", "M"])),
            bmi=round(float(rng.normal(27.0, 4.0)), 1),
        )
        records.append(ParticipantRecord(participant_id=f"P{p + 1:03d}", bouts=bouts, demographics=demographics))
    logger.info("Generated %d synthetic participants (seed %d)", len(records), spec.seed)
    return records


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def write_dataset(records: Sequence[ParticipantRecord], out_dir: str) -> str:
    """Write signal/VO2 CSVs and manifest.json; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    participants = []
    for record in records:
        folder = os.path.join(out_dir, record.participant_id)
        os.makedirs(folder, exist_ok=True)
        activities = []
        for index, bout in enumerate(record.bouts):
            stem = f"{index:02d}_{_slug(bout.activity_name)}"
            signal_rel = f"{record.participant_id}/{stem}.csv"
            times = bout.start_s + np.arange(bout.samples.shape[0]) / bout.sample_rate_hz
            write_signal_csv(os.path.join(out_dir, signal_rel), times, bout.samples)
            entry = {
                "activity": bout.activity_name,
                "signal": signal_rel,
                "sample_rate_hz": bout.sample_rate_hz,
                "start_s": bout.start_s,
            }
            if bout.vo2_series is not None:
                vo2_rel = f"{record.participant_id}/{stem}_vo2.csv"
                write_vo2_csv(os.path.join(out_dir, vo2_rel), bout.vo2_series)
                entry["vo2"] = vo2_rel
            activities.append(entry)
        demo = record.demographics
        participants.append(
            {
                "participant_id": record.participant_id,
                "demographics": None if demo is None else {"age": demo.age, "sex": demo.sex, "bmi": demo.bmi},
                "activities": activities,
            }
        )
    manifest_path = os.path.join(out_dir, "manifest.json")
    tmp_path = f"{manifest_path}.tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump({"version": MANIFEST_VERSION, "participants": participants}, handle, indent=2, sort_keys=True)
        handle.write("\n")
    os.replace(tmp_path, manifest_path)
    return manifest_path


def spectral_centroid(window: Tensor, rate_hz: float = 30.0) -> float:
    """Power-weighted mean frequency over the three axes, DC removed."""
    values = np.asarray(window, dtype=np.float64)
    centered = values - values.mean(axis=0, keepdims=True)
    power = np.abs(np.fft.rfft(centered, axis=0)) ** 2
    freqs = np.fft.rfftfreq(values.shape[0], d=1.0 / rate_hz)
    total = power.sum()
    if total == 0:
        return 0.0
    return float((freqs[:, None] * power).sum() / total)


def threshold_oracle(centroids: Sequence[float], labels: Sequence[int]) -> Tuple[float, float]:
    """Best single threshold "positive when centroid <= threshold"; returns (threshold, balanced accuracy)."""
    centroids = np.asarray(centroids, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("threshold_oracle needs both classes")
    values = np.unique(centroids)
    candidates = np.concatenate(([values[0] - 1.0], (values[:-1] + values[1:]) / 2.0, [values[-1]]))
    best = (float(candidates[0]), -1.0)
    for threshold in candidates:
        predicted = centroids <= threshold
        sensitivity = np.sum(predicted & (labels == 1)) / n_pos
        specificity = np.sum(~predicted & (labels == 0)) / n_neg
        balanced = float((sensitivity + specificity) / 2.0)
        if balanced > best[1]:
            best = (float(threshold), balanced)
    return best
