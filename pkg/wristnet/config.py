import os
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional

import yaml

from .errors import ValidationError


_ENV_PATTERN = re.compile(r"\$\{([A-Z0-9_]+)\}")

CLASSIFICATION_TASKS = ("sedentary", "locomotion", "lifestyle")
REGRESSION_TASK = "met_regression"
TASKS = CLASSIFICATION_TASKS + (REGRESSION_TASK,)
ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def _interpolate_env(value: Any) -> Any:
    if isinstance(value, str):
        def _replace(match: re.Match) -> str:
            var = match.group(1)
            return os.environ.get(var, "")

        return _ENV_PATTERN.sub(_replace, value)
    if isinstance(value, list):
        return [_interpolate_env(v) for v in value]
    if isinstance(value, dict):
        return {k: _interpolate_env(v) for k, v in value.items()}
    return value


@dataclass
class ModelConfig:
    task: str = "sedentary"
    epochs: int = 50
    patience: int = 5
    batch_size: int = 32
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    hidden_activation: str = "relu"
    kernel_width: int = 8

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValidationError(f"Unknown task '{self.task}'. Use one of: {', '.join(TASKS)}")
        if self.epochs < 1:
            raise ValidationError("model.epochs must be >= 1")
        if self.patience < 1:
            raise ValidationError("model.patience must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("model.batch_size must be >= 1")
        if self.kernel_width < 1:
            raise ValidationError("model.kernel_width must be >= 1")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValidationError("model.beta1 and model.beta2 must lie in (0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValidationError("model.learning_rate and model.epsilon must be positive")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValidationError(f"Unknown hidden_activation '{self.hidden_activation}'")

    @property
    def is_classification(self) -> bool:
        return self.task in CLASSIFICATION_TASKS


@dataclass
class PreprocessConfig:
    target_rate_hz: float = 30.0
    window_seconds: float = 15.0
    resample_method: str = "fourier"
    smoothing_seconds: float = 30.0
    steady_state_start_s: float = 120.0
    steady_state_end_s: float = 240.0
    vo2_per_met: float = 3.5

    def __post_init__(self) -> None:
        if self.resample_method not in ("fourier", "polyphase"):
            raise ValidationError("preprocess.resample_method must be 'fourier' or 'polyphase'")
        if self.target_rate_hz <= 0 or self.window_seconds <= 0:
            raise ValidationError("preprocess.target_rate_hz and window_seconds must be positive")
        if self.steady_state_end_s <= self.steady_state_start_s:
            raise ValidationError("preprocess.steady_state_end_s must exceed steady_state_start_s")

    @property
    def window_size(self) -> int:
        return int(round(self.target_rate_hz * self.window_seconds))


@dataclass
class EvaluateConfig:
    n_batches: int = 10
    batch_layout: str = "auto"
    workers: int = 1
    roc_grid_points: int = 101
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.n_batches < 2:
            raise ValidationError("evaluate.n_batches must be >= 2")
        if self.batch_layout not in ("auto", "balanced", "fill"):
            raise ValidationError("evaluate.batch_layout must be auto, balanced or fill")
        if self.workers < 1:
            raise ValidationError("evaluate.workers must be >= 1")
        if self.roc_grid_points < 2:
            raise ValidationError("evaluate.roc_grid_points must be >= 2")


@dataclass
class ClassBand:
    low_hz: float
    high_hz: float
    amplitude_g: float
    broadband: bool = False

    def __post_init__(self) -> None:
        if self.low_hz <= 0 or self.high_hz < self.low_hz or self.amplitude_g <= 0:
            raise ValidationError(
                f"Invalid class band {self.low_hz}-{self.high_hz} Hz, amplitude {self.amplitude_g} g"
            )


@dataclass
class SynthSpec:
    n_participants: int = 20
    bouts_per_class: int = 1
    bout_seconds: float = 120.0
    vo2_seconds: float = 300.0
    gap_seconds: float = 60.0
    sample_rates_hz: List[float] = field(default_factory=lambda: [100.0])
    sedentary: ClassBand = field(default_factory=lambda: ClassBand(0.1, 0.4, 0.05))
    locomotion: ClassBand = field(default_factory=lambda: ClassBand(1.5, 2.5, 0.8))
    lifestyle: ClassBand = field(default_factory=lambda: ClassBand(3.5, 6.0, 0.4, True))
    regression_only: ClassBand = field(default_factory=lambda: ClassBand(0.6, 1.2, 0.2))
    regression_only_bouts: int = 0
    amplitude_jitter: float = 0.3
    noise_sd: float = 0.01
    met_intercept: float = 1.0
    met_slope: float = 6.0
    met_min: float = 1.0
    met_max: float = 8.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("sedentary", "locomotion", "lifestyle", "regression_only"):
            value = getattr(self, name)
            if isinstance(value, dict):
                setattr(self, name, _build(ClassBand, value, f"synth.{name}"))
        if self.n_participants < 1 or self.bouts_per_class < 1:
            raise ValidationError("synth.n_participants and synth.bouts_per_class must be >= 1")
        if self.bout_seconds <= 0 or self.vo2_seconds <= 0 or self.gap_seconds < 0:
            raise ValidationError("synth durations must be positive")
        if not self.sample_rates_hz or any(rate <= 0 for rate in self.sample_rates_hz):
            raise ValidationError("synth.sample_rates_hz must list positive rates")
        if self.noise_sd < 0 or not (0.0 <= self.amplitude_jitter < 1.0):
            raise ValidationError("synth.noise_sd must be >= 0 and amplitude_jitter in [0, 1)")
        if self.met_max < self.met_min:
            raise ValidationError("synth.met_max must be >= synth.met_min")


@dataclass
class LoggingConfig:
    level: str = "INFO"


@dataclass
class WristnetConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    synth: SynthSpec = field(default_factory=SynthSpec)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    activities_path: str = ""
    env: Dict[str, str] = field(default_factory=dict)


def _build(cls, values: Dict[str, Any], label: str):
    if not isinstance(values, dict):
        raise ValidationError(f"{label} must be a mapping")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ValidationError(f"Invalid keys in {label}: {exc}") from exc


def _load_section(data: Dict[str, Any], key: str, cls):
    section = data.get(key, {})
    if section is None:
        return cls()
    return _build(cls, section, key)


def read_yaml(path: str) -> Dict[str, Any]:
    """Read a YAML (or JSON) mapping, reporting parse errors with line/column."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
            problem = getattr(exc, "problem", None) or str(exc)
            raise ValidationError(f"Malformed config {path}{where}: {problem}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{path} must contain a mapping at the top level")
    return _interpolate_env(raw)


def load_config(path: Optional[str] = None) -> WristnetConfig:
    if not path:
        return WristnetConfig()
    raw = read_yaml(path)
    known = {"model", "preprocess", "evaluate", "synth", "logging", "activities_path", "env"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f"Unknown config sections in {path}: {', '.join(unknown)}")

    config = WristnetConfig(
        model=_load_section(raw, "model", ModelConfig),
        preprocess=_load_section(raw, "preprocess", PreprocessConfig),
        evaluate=_load_section(raw, "evaluate", EvaluateConfig),
        synth=_load_section(raw, "synth", SynthSpec),
        logging=_load_section(raw, "logging", LoggingConfig),
        activities_path=str(raw.get("activities_path", "") or ""),
        env={str(k): str(v) for k, v in (raw.get("env", {}) or {}).items()},
    )
    return config


def load_synth_spec(path: str) -> SynthSpec:
    raw = read_yaml(path)
    # Accept either a bare spec or a full config file with a synth section.
    if "synth" in raw and isinstance(raw["synth"], dict):
        raw = raw["synth"]
    return _build(SynthSpec, raw, "synth")


def apply_overrides(
    config: WristnetConfig,
    *,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    epochs: Optional[int] = None,
    task: Optional[str] = None,
) -> WristnetConfig:
    model_changes: Dict[str, Any] = {}
    if seed is not None:
        model_changes["seed"] = seed
    if epochs is not None:
        model_changes["epochs"] = epochs
    if task is not None:
        model_changes["task"] = task
    model = replace(config.model, **model_changes) if model_changes else config.model
    evaluate = replace(config.evaluate, workers=workers) if workers is not None else config.evaluate
    synth = replace(config.synth, seed=seed) if seed is not None else config.synth
    return replace(config, model=model, evaluate=evaluate, synth=synth)


def config_to_dict(config: WristnetConfig) -> Dict[str, Any]:
    return asdict(config)
