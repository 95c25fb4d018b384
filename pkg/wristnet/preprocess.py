"""Raw signal streams and metabolic measurements -> labeled 450x3 windows."""
from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import signal

from .activities import ActivityTable, ClassFlags, default_activity_table
from .config import PreprocessConfig
from .env_utils import resolve_path
from .errors import (
    DimensionError,
    InsufficientDataError,
    UnsupportedRateError,
    ValidationError,
)
from .nn.tensor import Tensor, as_tensor

logger = logging.getLogger("wristnet.preprocess")

SIGNAL_COLUMNS = ["t_s", "x_g", "y_g", "z_g"]
VO2_COLUMNS = ["t_s", "vo2_ml_min_kg"]
MANIFEST_VERSION = 1


@dataclass
class Demographics:
    age: Optional[float] = None
    sex: Optional[str] = None
    bmi: Optional[float] = None


@dataclass
class ActivityBout:
    activity_name: str
    sample_rate_hz: float
    samples: Tensor
    class_flags: ClassFlags = field(default_factory=ClassFlags)
    vo2_series: Optional[Tensor] = None
    start_s: float = 0.0
    met: Optional[float] = None

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValidationError(f"{self.activity_name}: sample rate must be positive")
        if self.samples.ndim != 2 or self.samples.shape[1] != 3 or self.samples.shape[0] < 1:
            raise DimensionError(f"{self.activity_name}: samples must be [n >= 1, 3], got {self.samples.shape}")

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate_hz


@dataclass
class ParticipantRecord:
    participant_id: str
    bouts: List[ActivityBout]
    demographics: Optional[Demographics] = None


@dataclass
class WindowSample:
    values: Tensor
    labels: ClassFlags
    met: Optional[float]
    participant_id: str
    source_activity: str


@dataclass
class PreprocessStats:
    resample_method: str
    short_bouts: int = 0
    windows_per_participant: Dict[str, int] = field(default_factory=dict)
    windows_per_class: Dict[str, int] = field(default_factory=dict)
    classification_windows: int = 0
    regression_windows: int = 0
    classification_activities: int = 0
    regression_activities: int = 0
    catalogue_classification_activities: int = 0
    catalogue_regression_activities: int = 0


# Signal operations -----------------------------------------------------------


def resample_to_30hz(
    samples: Tensor,
    rate_hz: float,
    method: str = "fourier",
    target_rate_hz: float = 30.0,
) -> Tensor:
    """Downsample a [n, 3] stream to the target rate (30 Hz) along time.

    ``fourier`` uses scipy's FFT resampling; ``polyphase`` low-pass filters and
    decimates with ``resample_poly``. Output length is round(n * target / rate).
    """
    samples = as_tensor(samples, "samples")
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise DimensionError(f"samples must have shape [n, 3], got {samples.shape}")
    if rate_hz < target_rate_hz:
        raise UnsupportedRateError(f"Cannot resample {rate_hz} Hz up to {target_rate_hz} Hz")
    if rate_hz == target_rate_hz:
        return samples.copy()
    n = samples.shape[0]
    m = int(round(n * target_rate_hz / rate_hz))
    if m == 0:
        return np.zeros((0, 3))
    if method == "fourier":
        return signal.resample(samples, m, axis=0)
    if method == "polyphase":
        ratio = Fraction(target_rate_hz / rate_hz).limit_denominator(1000)
        out = signal.resample_poly(samples, ratio.numerator, ratio.denominator, axis=0)
        if out.shape[0] < m:
            out = np.pad(out, ((0, m - out.shape[0]), (0, 0)), mode="edge")
        return out[:m]
    raise ValidationError(f"Unknown resample method '{method}'")


def windowize(
    bout: ActivityBout,
    participant_id: str = "",
    window_size: int = 450,
    target_rate_hz: float = 30.0,
) -> List[WindowSample]:
    """Consecutive non-overlapping windows; the trailing remainder is dropped."""
    if not np.isclose(bout.sample_rate_hz, target_rate_hz):
        raise ValidationError(
            f"{bout.activity_name}: windowize expects {target_rate_hz} Hz, got {bout.sample_rate_hz} Hz"
        )
    samples = as_tensor(bout.samples, "samples")
    count = samples.shape[0] // window_size
    if count == 0:
        logger.warning(
            "Bout %s/%s has %d samples (< %d); no windows",
            participant_id,
            bout.activity_name,
            samples.shape[0],
            window_size,
        )
    return [
        WindowSample(
            values=samples[i * window_size : (i + 1) * window_size].copy(),
            labels=bout.class_flags,
            met=bout.met,
            participant_id=participant_id,
            source_activity=bout.activity_name,
        )
        for i in range(count)
    ]


def running_mean(times: Tensor, values: Tensor, width_s: float) -> Tensor:
    """Centered time-based running mean, truncated at the series edges."""
    half = width_s / 2.0
    lo = np.searchsorted(times, times - half, side="left")
    hi = np.searchsorted(times, times + half, side="right")
    cumulative = np.concatenate(([0.0], np.cumsum(values)))
    return (cumulative[hi] - cumulative[lo]) / (hi - lo)


def met_from_vo2(
    vo2_series: Tensor,
    activity_start_s: float,
    smoothing_s: float = 30.0,
    steady_state: Tuple[float, float] = (120.0, 240.0),
    vo2_per_met: float = 3.5,
) -> float:
    series = as_tensor(vo2_series, "vo2_series")
    if series.ndim != 2 or series.shape[1] != 2:
        raise DimensionError(f"vo2_series must be [k, 2] (time_s, vo2), got {series.shape}")
    series = series[np.argsort(series[:, 0], kind="stable")]
    times, values = series[:, 0], series[:, 1]
    if np.any(values <= 0):
        raise ValidationError("VO2 values must be positive")
    start, end = activity_start_s + steady_state[0], activity_start_s + steady_state[1]
    if times.size == 0 or times[-1] < end:
        covered = (times[-1] - activity_start_s) if times.size else 0.0
        raise InsufficientDataError(
            f"VO2 series covers {covered:.1f} s from activity start; need {steady_state[1]:.0f} s"
        )
    smoothed = running_mean(times, values, smoothing_s)
    mask = (times >= start) & (times <= end)
    if not np.any(mask):
        raise InsufficientDataError(f"No VO2 breaths inside the steady-state window [{start}, {end}] s")
    return float(np.mean(smoothed[mask]) / vo2_per_met)


# Labels ----------------------------------------------------------------------


def label_windows(
    windows: Sequence[WindowSample], table: Optional[ActivityTable] = None
) -> Tuple[List[WindowSample], List[WindowSample]]:
    """Split windows into the type-recognition set and the EE-estimation set.

    Regression-only activities are excluded from classification; every window with
    a MET value (any activity) belongs to the regression set.
    """
    table = table or default_activity_table()
    unknown = sorted({w.source_activity for w in windows if w.source_activity not in table})
    if unknown:
        offenders = [
            f"{w.participant_id}/{w.source_activity}" for w in windows if w.source_activity in unknown
        ]
        raise ValidationError(f"Unknown activities: {', '.join(sorted(set(offenders)))}")
    classification, regression = [], []
    for window in windows:
        activity = table.lookup(window.source_activity)
        if window.labels != activity.flags:
            raise ValidationError(
                f"{window.participant_id}/{window.source_activity}: flags {window.labels} "
                f"disagree with the activity table {activity.flags}"
            )
        if not activity.regression_only:
            classification.append(window)
        if window.met is not None:
            regression.append(window)
    return classification, regression


def task_labels(windows: Sequence[WindowSample], task: str) -> Tensor:
    return np.array([w.labels.for_task(task) for w in windows], dtype=np.float64)


def met_targets(windows: Sequence[WindowSample]) -> Tensor:
    if any(w.met is None for w in windows):
        raise ValidationError("Every regression window needs a MET value")
    return np.array([w.met for w in windows], dtype=np.float64)


def stack_windows(windows: Sequence[WindowSample]) -> Tensor:
    if not windows:
        return np.zeros((0, 450, 3))
    return np.stack([w.values for w in windows])


# Dataset pipeline ------------------------------------------------------------


def validate_dataset(records: Sequence[ParticipantRecord], table: Optional[ActivityTable] = None) -> None:
    table = table or default_activity_table()
    ids = Counter(record.participant_id for record in records)
    duplicated = sorted(pid for pid, count in ids.items() if count > 1)
    if duplicated:
        raise ValidationError(f"Duplicate participant ids: {', '.join(duplicated)}")
    for record in records:
        for bout in record.bouts:
            activity = table.lookup(bout.activity_name)
            if bout.class_flags != activity.flags:
                raise ValidationError(
                    f"{record.participant_id}/{bout.activity_name}: class flags {bout.class_flags} "
                    f"disagree with the activity table {activity.flags}"
                )
        ordered = sorted(record.bouts, key=lambda b: b.start_s)
        for previous, current in zip(ordered, ordered[1:]):
            if current.start_s < previous.start_s + previous.duration_s - 1e-9:
                raise ValidationError(
                    f"{record.participant_id}: bouts {previous.activity_name} and "
                    f"{current.activity_name} overlap in time"
                )


def summarize_windows(
    windows: Sequence[WindowSample], stats: PreprocessStats, table: ActivityTable
) -> PreprocessStats:
    classification, regression = label_windows(windows, table)
    per_participant = Counter(w.participant_id for w in windows)
    per_class: Counter = Counter()
    for window in windows:
        if table.lookup(window.source_activity).regression_only:
            per_class["regression_only"] += 1
        for name, flag in zip(("sedentary", "locomotion", "lifestyle"), window.labels.as_tuple()):
            if flag:
                per_class[name] += 1
    return replace(
        stats,
        windows_per_participant=dict(sorted(per_participant.items())),
        windows_per_class=dict(sorted(per_class.items())),
        classification_windows=len(classification),
        regression_windows=len(regression),
        classification_activities=len({w.source_activity for w in classification}),
        regression_activities=len({w.source_activity for w in regression}),
        catalogue_classification_activities=len(table.classification_names()),
        catalogue_regression_activities=len(table.regression_names()),
    )


def preprocess_dataset(
    records: Sequence[ParticipantRecord],
    config: Optional[PreprocessConfig] = None,
    table: Optional[ActivityTable] = None,
) -> Tuple[List[WindowSample], PreprocessStats]:
    config = config or PreprocessConfig()
    table = table or default_activity_table()
    validate_dataset(records, table)
    stats = PreprocessStats(resample_method=config.resample_method)
    windows: List[WindowSample] = []
    for record in records:
        for bout in record.bouts:
            met = bout.met
            if met is None and bout.vo2_series is not None:
                met = met_from_vo2(
                    bout.vo2_series,
                    bout.start_s,
                    smoothing_s=config.smoothing_seconds,
                    steady_state=(config.steady_state_start_s, config.steady_state_end_s),
                    vo2_per_met=config.vo2_per_met,
                )
            samples = resample_to_30hz(
                bout.samples, bout.sample_rate_hz, config.resample_method, config.target_rate_hz
            )
            if samples.shape[0] == 0:
                stats.short_bouts += 1
                continue
            resampled = replace(bout, samples=samples, sample_rate_hz=config.target_rate_hz, met=met)
            bout_windows = windowize(
                resampled, record.participant_id, config.window_size, config.target_rate_hz
            )
            if not bout_windows:
                stats.short_bouts += 1
            windows.extend(bout_windows)
        logger.debug("Participant %s preprocessed", record.participant_id)
    stats = summarize_windows(windows, stats, table)
    if stats.short_bouts:
        logger.warning("%d bouts were shorter than one window and produced no windows", stats.short_bouts)
    return windows, stats


def describe_participants(records: Sequence[ParticipantRecord]) -> Dict[str, Optional[float]]:
    """Descriptive characteristics: means and sample SDs, female count and share."""
    demographics = [r.demographics for r in records if r.demographics is not None]

    def _mean_sd(values: List[float]) -> Tuple[Optional[float], Optional[float]]:
        if not values:
            return None, None
        sd = float(np.std(values, ddof=1)) if len(values) > 1 else None
        return float(np.mean(values)), sd

    ages = [d.age for d in demographics if d.age is not None]
    bmis = [d.bmi for d in demographics if d.bmi is not None]
    sexes = [str(d.sex).upper() for d in demographics if d.sex]
    age_mean, age_sd = _mean_sd(ages)
    bmi_mean, bmi_sd = _mean_sd(bmis)
    female = sum(1 for s in sexes if s.startswith("F"))
    return {
        "n": len(records),
        "age_mean": age_mean,
        "age_sd": age_sd,
        "female_n": female,
        "female_pct": (100.0 * female / len(sexes)) if sexes else None,
        "bmi_mean": bmi_mean,
        "bmi_sd": bmi_sd,
    }


# File formats ----------------------------------------------------------------


def _read_csv(path: str, columns: List[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, encoding="utf-8")
    if list(frame.columns) != columns:
        raise ValidationError(f"{path}: expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}")
    if frame.empty:
        raise ValidationError(f"{path}: no data rows")
    return frame.astype(np.float64)


def read_signal_csv(path: str) -> Tuple[Tensor, Tensor]:
    frame = _read_csv(path, SIGNAL_COLUMNS)
    return frame["t_s"].to_numpy(), frame[["x_g", "y_g", "z_g"]].to_numpy()


def read_vo2_csv(path: str) -> Tensor:
    return _read_csv(path, VO2_COLUMNS).to_numpy()


def write_signal_csv(path: str, times: Tensor, samples: Tensor) -> None:
    frame = pd.DataFrame({"t_s": times, "x_g": samples[:, 0], "y_g": samples[:, 1], "z_g": samples[:, 2]})
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def write_vo2_csv(path: str, series: Tensor) -> None:
    frame = pd.DataFrame(series, columns=VO2_COLUMNS)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def load_manifest(path: str, table: Optional[ActivityTable] = None) -> List[ParticipantRecord]:
    """Load a dataset manifest; file paths resolve relative to the manifest."""
    table = table or default_activity_table()
    base_dir = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Malformed manifest {path} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    if raw.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
        raise ValidationError(f"{path}: unsupported manifest version {raw.get('version')}")

    entries = raw.get("participants", []) or []
    missing = []
    for entry in entries:
        for activity in entry.get("activities", []) or []:
            for key in ("signal", "vo2"):
                if activity.get(key):
                    candidate = resolve_path(base_dir, activity[key])
                    if not os.path.exists(candidate):
                        missing.append(candidate)
    if missing:
        raise ValidationError(f"Missing input files: {', '.join(missing)}")

    records: List[ParticipantRecord] = []
    for entry in entries:
        pid = str(entry.get("participant_id", "")).strip()
        if not pid:
            raise ValidationError(f"{path}: participant without participant_id")
        bouts = []
        for activity in entry.get("activities", []) or []:
            name = activity.get("activity", "")
            catalogue = table.lookup(name)
            flags = ClassFlags.from_dict(activity["flags"]) if "flags" in activity else catalogue.flags
            times, samples = read_signal_csv(resolve_path(base_dir, activity["signal"]))
            vo2 = read_vo2_csv(resolve_path(base_dir, activity["vo2"])) if activity.get("vo2") else None
            met = activity.get("met")
            bouts.append(
                ActivityBout(
                    activity_name=catalogue.name,
                    sample_rate_hz=float(activity["sample_rate_hz"]),
                    samples=samples,
                    class_flags=flags,
                    vo2_series=vo2,
                    start_s=float(activity.get("start_s", times[0])),
                    met=float(met) if met is not None else None,
                )
            )
        demo = entry.get("demographics")
        records.append(
            ParticipantRecord(
                participant_id=pid,
                bouts=bouts,
                demographics=Demographics(**demo) if demo else None,
            )
        )
    return records
