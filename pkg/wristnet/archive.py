"""Window archive: a flat little-endian record file of labeled 450x3 windows.

Layout: magic ``WNWA``, version byte, uint32 record count, then per record the
float64 window values, a label byte (bit0 sedentary, bit1 locomotion, bit2 lifestyle),
float64 MET (NaN when absent), participant id and activity name as uint16-length
prefixed UTF-8.
"""
from __future__ import annotations

import logging
import os
import struct
from typing import BinaryIO, List, Sequence

import numpy as np

from .activities import ClassFlags
from .errors import DimensionError, FormatVersionError, ValidationError
from .preprocess import WindowSample

logger = logging.getLogger("wristnet.archive")

MAGIC = b"WNWA"
VERSION = 1
WINDOW_SHAPE = (450, 3)
_WINDOW_BYTES = WINDOW_SHAPE[0] * WINDOW_SHAPE[1] * 8


def _write_text(handle: BinaryIO, text: str) -> None:
    data = text.encode("utf-8")
    if len(data) > 0xFFFF:
        raise ValidationError(f"String too long for the archive: {text[:40]}...")
    handle.write(struct.pack("<H", len(data)))
    handle.write(data)


def _read_exact(handle: BinaryIO, size: int, path: str) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise FormatVersionError(f"{path}: truncated archive")
    return data


def _read_text(handle: BinaryIO, path: str) -> str:
    (length,) = struct.unpack("<H", _read_exact(handle, 2, path))
    return _read_exact(handle, length, path).decode("utf-8")


def write_archive(path: str, windows: Sequence[WindowSample]) -> None:
    """Write windows atomically (temp file, then rename)."""
    tmp_path = f"{path}.tmp"
    try:
        with open(tmp_path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<BI", VERSION, len(windows)))
            for window in windows:
                values = np.asarray(window.values, dtype="<f8")
                if values.shape != WINDOW_SHAPE:
                    raise DimensionError(f"Archive windows must be {WINDOW_SHAPE}, got {values.shape}")
                handle.write(values.tobytes(order="C"))
                met = float("nan") if window.met is None else float(window.met)
                handle.write(struct.pack("<Bd", window.labels.to_byte(), met))
                _write_text(handle, window.participant_id)
                _write_text(handle, window.source_activity)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    os.replace(tmp_path, path)
    logger.info("Wrote %d windows to %s", len(windows), path)


def read_archive(path: str) -> List[WindowSample]:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != MAGIC:
            raise FormatVersionError(f"{path}: not a window archive (magic {magic!r})")
        version, count = struct.unpack("<BI", _read_exact(handle, 5, path))
        if version != VERSION:
            raise FormatVersionError(f"{path}: archive version {version}, expected {VERSION}")
        windows: List[WindowSample] = []
        for _ in range(count):
            values = np.frombuffer(_read_exact(handle, _WINDOW_BYTES, path), dtype="<f8")
            label_byte, met = struct.unpack("<Bd", _read_exact(handle, 9, path))
            participant_id = _read_text(handle, path)
            activity = _read_text(handle, path)
            windows.append(
                WindowSample(
                    values=values.reshape(WINDOW_SHAPE).astype(np.float64),
                    labels=ClassFlags.from_byte(label_byte),
                    met=None if np.isnan(met) else met,
                    participant_id=participant_id,
                    source_activity=activity,
                )
            )
        if handle.read(1):
            raise FormatVersionError(f"{path}: trailing bytes after {count} records")
    logger.debug("Read %d windows from %s", len(windows), path)
    return windows
