import json
import os

import pytest

from wristnet.config import (
    ClassBand,
    ModelConfig,
    WristnetConfig,
    apply_overrides,
    load_config,
    load_synth_spec,
)
from wristnet.env_utils import export_env
from wristnet.errors import ValidationError


def test_defaults_without_path():
    config = load_config(None)
    assert config == WristnetConfig()
    assert config.model.epochs == 50 and config.model.patience == 5
    assert config.preprocess.window_size == 450
    assert config.evaluate.n_batches == 10


def test_yaml_with_env_interpolation(tmp_path, monkeypatch):
    monkeypatch.setenv("WRISTNET_TEST_TABLE", "tables/custom.yaml")
    path = tmp_path / "wristnet.yaml"
    path.write_text(
        "model:\n  task: locomotion\n  epochs: 3\n"
        "evaluate:\n  workers: 2\n"
        "activities_path: ${WRISTNET_TEST_TABLE}\n"
    )
    config = load_config(str(path))
    assert config.model.task == "locomotion" and config.model.epochs == 3
    assert config.model.batch_size == 32
    assert config.evaluate.workers == 2
    assert config.activities_path == "tables/custom.yaml"


def test_json_config_is_accepted(tmp_path):
    path = tmp_path / "wristnet.json"
    path.write_text(json.dumps({"model": {"seed": 9}, "synth": {"n_participants": 4}}))
    config = load_config(str(path))
    assert config.model.seed == 9
    assert config.synth.n_participants == 4


@pytest.mark.parametrize(
    "body, message",
    [
        ("training:\n  epochs: 3\n", "Unknown config sections"),
        ("model:\n  epoch: 3\n", "Invalid keys in model"),
        ("model:\n  task: running\n", "Unknown task"),
        ("model: [1, 2]\n", "must be a mapping"),
        ("- 1\n- 2\n", "top level"),
        ("evaluate:\n  n_batches: 1\n", "n_batches"),
    ],
)
def test_invalid_configs(tmp_path, body, message):
    path = tmp_path / "bad.yaml"
    path.write_text(body)
    with pytest.raises(ValidationError, match=message):
        load_config(str(path))


def test_malformed_yaml_reports_position(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("model:\n  epochs: [3\n")
    with pytest.raises(ValidationError, match=r"line \d+, column \d+"):
        load_config(str(path))


def test_apply_overrides_leaves_original_untouched():
    config = WristnetConfig()
    updated = apply_overrides(config, seed=5, workers=3, epochs=2, task="lifestyle")
    assert (updated.model.seed, updated.model.epochs, updated.model.task) == (5, 2, "lifestyle")
    assert updated.evaluate.workers == 3 and updated.synth.seed == 5
    assert config.model == ModelConfig()
    assert apply_overrides(config) == config


def test_synth_spec_from_bare_file_or_config_section(tmp_path):
    bare = tmp_path / "spec.yaml"
    bare.write_text("n_participants: 6\nlocomotion: {low_hz: 1.0, high_hz: 2.0, amplitude_g: 0.5}\n")
    spec = load_synth_spec(str(bare))
    assert spec.n_participants == 6
    assert spec.locomotion == ClassBand(1.0, 2.0, 0.5)

    nested = tmp_path / "config.yaml"
    nested.write_text("synth:\n  seed: 4\n")
    assert load_synth_spec(str(nested)).seed == 4

    broken = tmp_path / "broken.yaml"
    broken.write_text("n_participants: 0\n")
    with pytest.raises(ValidationError):
        load_synth_spec(str(broken))


def test_export_env_resolves_activities_path(tmp_path, monkeypatch):
    monkeypatch.setenv("WRISTNET_TEST_VALUE", "0")
    config = WristnetConfig(activities_path="custom.yaml", env={"WRISTNET_TEST_VALUE": "1"})
    export_env(config, str(tmp_path / "wristnet.yaml"))
    assert os.environ["WRISTNET_TEST_VALUE"] == "1"
    assert os.environ["WRISTNET_ACTIVITIES"] == str(tmp_path / "custom.yaml")
