import json
import logging

import numpy as np
import pandas as pd
import pytest

from wristnet.main import main, setup_logging
from wristnet.preprocess import write_signal_csv

CONFIG = {
    "model": {"epochs": 1, "patience": 1, "batch_size": 8},
    "evaluate": {"n_batches": 3},
    "synth": {"n_participants": 4, "bout_seconds": 30},
    "logging": {"level": "WARNING"},
}


@pytest.fixture
def workspace(tmp_path):
    config = tmp_path / "wristnet.json"
    config.write_text(json.dumps(CONFIG))
    return tmp_path, str(config)


@pytest.fixture
def archive(workspace):
    root, config = workspace
    assert main(["synth", str(root / "synth"), "--config", config]) == 0
    out = str(root / "windows.wnwa")
    assert main(["preprocess", str(root / "synth" / "manifest.json"), out, "--config", config]) == 0
    return out


def test_synth_then_preprocess(workspace, archive, capsys):
    root, config = workspace
    assert (root / "synth" / "run_manifest.json").exists()
    manifest = json.loads((root / "windows.wnwa.manifest.json").read_text())
    assert manifest["command"] == "preprocess"
    assert manifest["outputs"] == [archive]
    first = (root / "windows.wnwa").read_bytes()
    assert main(["preprocess", str(root / "synth" / "manifest.json"), archive, "--config", config]) == 0
    assert (root / "windows.wnwa").read_bytes() == first
    out = capsys.readouterr().out
    assert "windows: 24" in out
    assert "participant P004: 6" in out
    assert "of 29 activities" in out and "of 33 activities" in out


def test_train_predict_nested_cv_report(workspace, archive, capsys):
    root, config = workspace
    checkpoint = str(root / "model.wnck")
    assert main(["train", archive, checkpoint, "--config", config, "--task", "locomotion"]) == 0
    assert (root / "model.wnck.manifest.json").exists()

    predictions = str(root / "scores.csv")
    assert main(["predict", checkpoint, archive, predictions, "--config", config]) == 0
    frame = pd.read_csv(predictions)
    assert list(frame.columns) == ["window_id", "score", "label"]
    assert len(frame) == 24
    assert frame["score"].between(0.0, 1.0).all()

    report_dir = root / "cv"
    assert main(["nested-cv", archive, str(report_dir), "--config", config]) == 0
    report = json.loads((report_dir / "report.json").read_text())
    assert report["summary"]["n_runs"] == 6
    assert len(report["runs"]) == 6
    assert (report_dir / "roc_mean.csv").exists()
    assert (report_dir / "run_manifest.json").exists()

    capsys.readouterr()
    assert main(["report", str(report_dir / "report.json")]) == 0
    assert "balanced_accuracy" in capsys.readouterr().out


def test_regression_predictions_have_no_label(workspace, archive):
    root, config = workspace
    checkpoint = str(root / "met.wnck")
    assert main(["train", archive, checkpoint, "--config", config, "--task", "met_regression"]) == 0
    predictions = root / "met.csv"
    assert main(["predict", checkpoint, archive, str(predictions), "--config", config]) == 0
    assert list(pd.read_csv(predictions).columns) == ["window_id", "score"]


def test_report_is_independent_of_worker_count(workspace, archive):
    root, config = workspace
    for workers in ("1", "2"):
        out = str(root / f"cv_{workers}")
        assert main(["nested-cv", archive, out, "--config", config, "--workers", workers]) == 0
    assert (root / "cv_1" / "report.json").read_bytes() == (root / "cv_2" / "report.json").read_bytes()


def test_ten_minute_bout_gives_forty_windows(workspace, capsys):
    root, config = workspace
    times = np.arange(60000) / 100.0
    samples = np.random.default_rng(0).normal(size=(60000, 3))
    write_signal_csv(str(root / "computer.csv"), times, samples)
    manifest = {
        "version": 1,
        "participants": [
            {
                "participant_id": "P1",
                "activities": [{"activity": "COMPUTER WORK", "signal": "computer.csv", "sample_rate_hz": 100}],
            }
        ],
    }
    (root / "manifest.json").write_text(json.dumps(manifest))
    assert main(["preprocess", str(root / "manifest.json"), str(root / "one.wnwa"), "--config", config]) == 0
    assert "windows: 40" in capsys.readouterr().out


def test_config_from_environment(workspace, monkeypatch):
    root, config = workspace
    monkeypatch.setenv("WRISTNET_CONFIG", config)
    assert main(["synth", str(root / "env_synth")]) == 0
    assert len(list((root / "env_synth").glob("P*"))) == 4


def test_malformed_spec_exits_with_validation_code(workspace):
    root, config = workspace
    spec = root / "spec.yaml"
    spec.write_text("n_participants: [4\n")
    assert main(["synth", str(root / "out"), "--spec", str(spec), "--config", config]) == 2


def test_bad_config_and_missing_files(workspace):
    root, config = workspace
    bad = root / "bad.yaml"
    bad.write_text("model:\n  epochs: 0\n")
    assert main(["synth", str(root / "out"), "--config", str(bad)]) == 2
    assert main(["preprocess", str(root / "absent.json"), str(root / "x.wnwa"), "--config", config]) == 2
    assert main(["report", str(root / "absent.json")]) == 2


def test_unknown_task_is_a_usage_error(workspace, archive):
    root, config = workspace
    with pytest.raises(SystemExit) as excinfo:
        main(["train", archive, str(root / "m.wnck"), "--task", "running"])
    assert excinfo.value.code == 2


def test_predict_rejects_empty_archive(workspace, archive):
    root, config = workspace
    from wristnet.archive import write_archive

    checkpoint = str(root / "model.wnck")
    assert main(["train", archive, checkpoint, "--config", config]) == 0
    empty = str(root / "empty.wnwa")
    write_archive(empty, [])
    assert main(["predict", checkpoint, empty, str(root / "p.csv"), "--config", config]) == 2


def test_checkpoint_version_mismatch_exits_with_one(workspace, archive):
    root, config = workspace
    checkpoint = root / "model.wnck"
    assert main(["train", archive, str(checkpoint), "--config", config]) == 0
    data = bytearray(checkpoint.read_bytes())
    data[4] = 99
    checkpoint.write_bytes(bytes(data))
    assert main(["predict", str(checkpoint), archive, str(root / "p.csv"), "--config", config]) == 1


def test_setup_logging_configures_the_root_logger_only(monkeypatch):
    calls = []
    monkeypatch.setattr("wristnet.main.logging.basicConfig", lambda **kwargs: calls.append(kwargs))
    setup_logging("DEBUG")
    assert len(calls) == 1
    assert calls[0]["level"] == "DEBUG"
    assert "%(name)s" in calls[0]["format"]
    assert logging.getLogger("matplotlib").level == logging.NOTSET
    assert logging.getLogger("numexpr").level == logging.NOTSET
