from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import yaml

from .errors import ValidationError


_FLAG_NAMES = ("sedentary", "locomotion", "lifestyle")


@dataclass(frozen=True)
class ClassFlags:
    sedentary: bool = False
    locomotion: bool = False
    lifestyle: bool = False

    def as_tuple(self) -> Tuple[bool, bool, bool]:
        return (self.sedentary, self.locomotion, self.lifestyle)

    def any(self) -> bool:
        return any(self.as_tuple())

    def for_task(self, task: str) -> int:
        if task not in _FLAG_NAMES:
            raise ValidationError(f"'{task}' is not a classification task")
        return int(getattr(self, task))

    def to_byte(self) -> int:
        return sum(int(flag) << bit for bit, flag in enumerate(self.as_tuple()))

    @classmethod
    def from_byte(cls, value: int) -> "ClassFlags":
        return cls(bool(value & 1), bool(value & 2), bool(value & 4))

    @classmethod
    def from_dict(cls, values: Dict[str, bool]) -> "ClassFlags":
        unknown = set(values) - set(_FLAG_NAMES)
        if unknown:
            raise ValidationError(f"Unknown class flags: {', '.join(sorted(unknown))}")
        flags = cls(**{name: bool(values.get(name, False)) for name in _FLAG_NAMES})
        if sum(flags.as_tuple()) > 1:
            raise ValidationError(f"At most one class flag may be set, got {values}")
        return flags


@dataclass(frozen=True)
class ActivityType:
    name: str
    flags: ClassFlags
    regression_only: bool = False


@dataclass
class ActivityTable:
    activities: Dict[str, ActivityType]

    def lookup(self, name: str) -> ActivityType:
        key = normalize_activity_name(name)
        if key not in self.activities:
            raise ValidationError(f"Unknown activity '{name}'")
        return self.activities[key]

    def __contains__(self, name: str) -> bool:
        return normalize_activity_name(name) in self.activities

    def classification_names(self) -> List[str]:
        return [name for name, act in self.activities.items() if not act.regression_only]

    def regression_names(self) -> List[str]:
        return list(self.activities)


def normalize_activity_name(name: str) -> str:
    # Footnote markers ("STRETCHING YOGA*") are not part of the name.
    return " ".join(str(name).replace("*", " ").split()).upper()


def load_activity_table(path: str) -> ActivityTable:
    with open(path, "r", encoding="utf-8") as handle:
        raw = yaml.safe_load(handle) or {}
    activities_raw = raw.get("activities", {}) or {}
    activities: Dict[str, ActivityType] = {}
    for name, values in activities_raw.items():
        values = dict(values or {})
        regression_only = bool(values.pop("regression_only", False))
        flags = ClassFlags.from_dict(values)
        if regression_only and flags.any():
            raise ValidationError(f"Activity '{name}' is regression-only but has class flags")
        if not regression_only and not flags.any():
            raise ValidationError(f"Activity '{name}' needs exactly one class flag")
        key = normalize_activity_name(name)
        if key in activities:
            raise ValidationError(f"Duplicate activity '{name}' in {path}")
        activities[key] = ActivityType(name=key, flags=flags, regression_only=regression_only)
    return ActivityTable(activities=activities)


def resolve_activities_path() -> str:
    default = os.path.join(os.path.dirname(os.path.abspath(__file__)), "activities.yaml")
    return os.environ.get("WRISTNET_ACTIVITIES", default)


@lru_cache(maxsize=8)
def _cached_table(path: str) -> ActivityTable:
    return load_activity_table(path)


def default_activity_table() -> ActivityTable:
    return _cached_table(resolve_activities_path())
