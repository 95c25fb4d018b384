"""report.json, ROC CSVs and run manifests."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from . import __version__
from .config import WristnetConfig, config_to_dict
from .errors import FormatVersionError, ValidationError
from .evaluate import RunReport, SummaryReport
from .metrics import RocPoints

logger = logging.getLogger("wristnet.report")

REPORT_VERSION = 1


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    os.replace(tmp_path, path)


def write_roc_csv(path: str, points: RocPoints) -> None:
    frame = pd.DataFrame(points, columns=["fpr", "tpr"])
    atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def _run_entry(run: RunReport) -> Dict[str, Any]:
    entry = asdict(run)
    # Curves live in roc_run_<k>.csv.
    entry.pop("roc_points")
    return entry


def _config_echo(config: WristnetConfig) -> Dict[str, Any]:
    echo = config_to_dict(config)
    # Reports must match across worker counts.
    echo["evaluate"].pop("workers", None)
    return echo


def build_report(
    runs: Sequence[RunReport], summary: SummaryReport, config: WristnetConfig
) -> Dict[str, Any]:
    ordered = sorted(runs, key=lambda r: r.run_id)
    return {
        "report_version": REPORT_VERSION,
        "wristnet_version": __version__,
        "task": summary.task,
        "config": _config_echo(config),
        "seeds": {"base": config.model.seed, "runs": [r.seed for r in ordered]},
        "fold_plan": {"batches": summary.fold_plan.batches, "runs": [list(r) for r in summary.fold_plan.runs]},
        "runs": [_run_entry(r) for r in ordered],
        "summary": {
            "n_runs": summary.n_runs,
            "mean": summary.mean,
            "sd": summary.sd,
            "defined_runs": summary.defined_runs,
            "sd_convention": summary.sd_convention,
            "test_set": summary.test_set,
        },
    }


def write_report(
    out_dir: str, runs: Sequence[RunReport], summary: SummaryReport, config: WristnetConfig
) -> List[str]:
    """Write report.json plus per-run and mean ROC CSVs; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    report_path = os.path.join(out_dir, "report.json")
    atomic_write_text(report_path, json.dumps(build_report(runs, summary, config), indent=2, sort_keys=True) + "\n")
    written.append(report_path)
    for run in sorted(runs, key=lambda r: r.run_id):
        if run.roc_points:
            path = os.path.join(out_dir, f"roc_run_{run.run_id}.csv")
            write_roc_csv(path, run.roc_points)
            written.append(path)
    if summary.mean_roc:
        path = os.path.join(out_dir, "roc_mean.csv")
        write_roc_csv(path, summary.mean_roc)
        written.append(path)
    logger.info("Wrote %d report files to %s", len(written), out_dir)
    return written


def load_report(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            report = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Malformed report {path} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    if report.get("report_version") != REPORT_VERSION:
        raise FormatVersionError(f"{path}: report version {report.get('report_version')}, expected {REPORT_VERSION}")
    return report


def _cell(mean: Optional[float], sd: Optional[float]) -> str:
    if mean is None:
        return "undefined"
    return f"{mean:.2f} ({sd:.2f})"


def format_summary(report: Dict[str, Any]) -> str:
    summary = report["summary"]
    lines = [f"task: {report['task']}  runs: {summary['n_runs']}  sd: {summary['sd_convention']}"]
    for name in sorted(summary["mean"]):
        defined = summary["defined_runs"].get(name, 0)
        suffix = "" if defined == summary["n_runs"] else f"  [{defined} runs defined]"
        lines.append(f"  {name:<18} {_cell(summary['mean'][name], summary['sd'][name])}{suffix}")
    return "\n".join(lines)


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    seed: int = 0
    version: str = __version__
    wall_time_s: float = 0.0


def manifest_path_for(output: str) -> str:
    if os.path.isdir(output):
        return os.path.join(output, "run_manifest.json")
    return f"{output}.manifest.json"


def write_manifest(output: str, manifest: RunManifest) -> str:
    path = manifest_path_for(output)
    atomic_write_text(path, json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    return path
