"""Versioned binary checkpoints: magic, version, JSON header, little-endian float64 tensors."""
from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import asdict

import numpy as np

from . import __version__
from .config import ModelConfig
from .errors import FormatVersionError
from .model import TrainedModel, network_layers
from .nn import NetworkParameters, parameter_shapes
from .nn.network import layer_name

logger = logging.getLogger("wristnet.checkpoint")

MAGIC = b"WNCK"
VERSION = 1


def save_checkpoint(path: str, model: TrainedModel) -> None:
    layers = model.layers
    tensors = []
    for index, spec in enumerate(layers):
        name = layer_name(spec, index)
        for key, shape in parameter_shapes(spec).items():
            tensors.append({"name": f"{name}/{key}", "shape": list(shape)})
    header = {
        "format_version": VERSION,
        "wristnet_version": __version__,
        "config": asdict(model.config),
        "layers": [
            {
                "kind": spec.kind.value,
                "in_features": spec.in_features,
                "out_features": spec.out_features,
                "kernel_width": spec.kernel_width,
                "activation": spec.activation,
                "name": spec.name,
            }
            for spec in layers
        ],
        "tensors": tensors,
        "history": [list(entry) for entry in model.history],
        "stopped_epoch": model.stopped_epoch,
        "best_epoch": model.best_epoch,
        "target_mean": model.target_mean,
        "target_scale": model.target_scale,
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp_path = f"{path}.tmp"
    try:
        with open(tmp_path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<BI", VERSION, len(encoded)))
            handle.write(encoded)
            for entry in tensors:
                handle.write(np.ascontiguousarray(model.parameters[entry["name"]], dtype="<f8").tobytes())
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    os.replace(tmp_path, path)
    logger.info("Saved %s checkpoint to %s", model.config.task, path)


def load_checkpoint(path: str) -> TrainedModel:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != MAGIC:
            raise FormatVersionError(f"{path}: not a wristnet checkpoint (magic {magic!r})")
        prefix = handle.read(5)
        if len(prefix) != 5:
            raise FormatVersionError(f"{path}: truncated checkpoint header")
        version, header_len = struct.unpack("<BI", prefix)
        if version != VERSION:
            raise FormatVersionError(f"{path}: checkpoint version {version}, expected {VERSION}")
        try:
            header = json.loads(handle.read(header_len).decode("utf-8"))
            config = ModelConfig(**header["config"])
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatVersionError(f"{path}: corrupted checkpoint header ({exc})") from exc
        expected = [
            f"{layer_name(spec, i)}/{key}"
            for i, spec in enumerate(network_layers(config.task, config.kernel_width, config.hidden_activation))
            for key in parameter_shapes(spec)
        ]
        names = [entry["name"] for entry in header["tensors"]]
        if names != expected:
            raise FormatVersionError(f"{path}: tensor layout does not match the {config.task} network")
        values = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            size = int(np.prod(shape)) * 8
            data = handle.read(size)
            if len(data) != size:
                raise FormatVersionError(f"{path}: truncated tensor {entry['name']}")
            values[entry["name"]] = np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)
        if handle.read(1):
            raise FormatVersionError(f"{path}: trailing bytes after tensors")
    return TrainedModel(
        config=config,
        parameters=NetworkParameters(values=values),
        history=[tuple(entry) for entry in header.get("history", [])],
        stopped_epoch=int(header.get("stopped_epoch", 0)),
        best_epoch=int(header.get("best_epoch", 0)),
        target_mean=float(header.get("target_mean", 0.0)),
        target_scale=float(header.get("target_scale", 1.0)),
    )
