"""Wrist accelerometer activity-type recognition and energy expenditure estimation."""

__version__ = "0.3.0"
