"""Participant-batched nested cross-validation.

Every ordered pair of distinct batches is one run: the first batch is the test set,
the second drives early stopping, and the remaining batches are trained on.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .activities import ActivityTable, default_activity_table
from .config import EvaluateConfig, ModelConfig
from .errors import IntegrityError, UndefinedMetricError, ValidationError
from .metrics import METRIC_NAMES, RocPoints, confusion_at, confusion_metrics, mean_roc, rmse, roc_auc
from .model import predict, select_task_windows, targets_for, train
from .preprocess import WindowSample

logger = logging.getLogger("wristnet.evaluate")

STUDY_COHORT = (145, 10)


@dataclass
class FoldPlan:
    batches: List[List[str]]
    runs: List[Tuple[int, int]]

    def split(self, run_index: int) -> Tuple[Set[str], Set[str], Set[str]]:
        test_batch, val_batch = self.runs[run_index]
        test_ids = set(self.batches[test_batch])
        val_ids = set(self.batches[val_batch])
        train_ids = {
            pid
            for index, batch in enumerate(self.batches)
            if index not in (test_batch, val_batch)
            for pid in batch
        }
        return train_ids, val_ids, test_ids

    def participants(self) -> Set[str]:
        return {pid for batch in self.batches for pid in batch}


def _batch_sizes(n: int, n_batches: int, layout: str) -> List[int]:
    if layout == "auto":
        layout = "fill" if (n, n_batches) == STUDY_COHORT else "balanced"
    if layout == "fill":
        size = math.ceil(n / n_batches)
        last = n - size * (n_batches - 1)
        if last < 1:
            raise ValidationError(f"Cannot fill {n_batches} batches of {size} from {n} participants")
        return [size] * (n_batches - 1) + [last]
    if layout == "balanced":
        base, extra = divmod(n, n_batches)
        return [base + 1 if i < extra else base for i in range(n_batches)]
    raise ValidationError(f"Unknown batch layout '{layout}'")


def make_fold_plan(
    participant_ids: Sequence[str], n_batches: int = 10, seed: int = 0, layout: str = "auto"
) -> FoldPlan:
    ids = sorted(set(participant_ids))
    if n_batches < 2:
        raise ValidationError("Nested cross-validation needs at least 2 batches")
    if len(ids) < n_batches:
        raise ValidationError(f"{len(ids)} participants cannot fill {n_batches} batches")
    shuffled = [ids[i] for i in np.random.default_rng(seed).permutation(len(ids))]
    batches: List[List[str]] = []
    start = 0
    for size in _batch_sizes(len(ids), n_batches, layout):
        batches.append(shuffled[start : start + size])
        start += size
    runs = [(test, val) for test in range(n_batches) for val in range(n_batches) if val != test]
    return FoldPlan(batches=batches, runs=runs)


def check_split_integrity(plan: FoldPlan, run_index: int, participants: Set[str]) -> None:
    train_ids, val_ids, test_ids = plan.split(run_index)
    leaks = (train_ids & val_ids) | (train_ids & test_ids) | (val_ids & test_ids)
    if leaks:
        raise IntegrityError(f"Run {run_index}: participants in more than one split: {', '.join(sorted(leaks))}")
    if train_ids | val_ids | test_ids != participants:
        missing = participants - (train_ids | val_ids | test_ids)
        raise IntegrityError(f"Run {run_index}: participants missing from every split: {', '.join(sorted(missing))}")


@dataclass
class RunReport:
    run_id: int
    test_batch: int
    val_batch: int
    seed: int
    n_train: int
    n_val: int
    n_test: int
    stopped_epoch: int
    best_epoch: int
    confusion: Optional[Dict[str, int]] = None
    metrics: Dict[str, Optional[float]] = field(default_factory=dict)
    auc: Optional[float] = None
    roc_points: RocPoints = field(default_factory=list)
    rmse: Optional[float] = None
    undefined: List[str] = field(default_factory=list)

    def metric(self, name: str) -> Optional[float]:
        if name == "auc":
            return self.auc
        if name == "rmse":
            return self.rmse
        return self.metrics.get(name)


@dataclass
class SummaryReport:
    task: str
    n_runs: int
    mean: Dict[str, Optional[float]]
    sd: Dict[str, Optional[float]]
    defined_runs: Dict[str, int]
    mean_roc: RocPoints
    fold_plan: FoldPlan
    sd_convention: str = "population"
    test_set: str = "full (not downsampled)"


def summary_metric_names(task_is_classification: bool) -> Tuple[str, ...]:
    return METRIC_NAMES + ("auc",) if task_is_classification else ("rmse",)


def summarize(
    runs: Sequence[RunReport], task: str, plan: FoldPlan, is_classification: bool, grid_points: int = 101
) -> SummaryReport:
    """Run-level mean and population SD of every metric, skipping undefined values."""
    ordered = sorted(runs, key=lambda r: r.run_id)
    mean: Dict[str, Optional[float]] = {}
    sd: Dict[str, Optional[float]] = {}
    defined: Dict[str, int] = {}
    for name in summary_metric_names(is_classification):
        values = [r.metric(name) for r in ordered if r.metric(name) is not None]
        defined[name] = len(values)
        mean[name] = float(np.mean(values)) if values else None
        sd[name] = float(np.std(values)) if values else None
    curves = [r.roc_points for r in ordered if r.roc_points]
    return SummaryReport(
        task=task,
        n_runs=len(ordered),
        mean=mean,
        sd=sd,
        defined_runs=defined,
        mean_roc=mean_roc(curves, grid_points) if curves else [],
        fold_plan=plan,
    )


def execute_run(
    run_index: int,
    plan: FoldPlan,
    windows: Sequence[WindowSample],
    model_config: ModelConfig,
    evaluate_config: EvaluateConfig,
    table: Optional[ActivityTable] = None,
) -> RunReport:
    check_split_integrity(plan, run_index, plan.participants())
    train_ids, val_ids, test_ids = plan.split(run_index)
    test_batch, val_batch = plan.runs[run_index]
    train_set = [w for w in windows if w.participant_id in train_ids]
    val_set = [w for w in windows if w.participant_id in val_ids]
    test_set = [w for w in windows if w.participant_id in test_ids]
    config = replace(model_config, seed=model_config.seed + run_index)
    logger.info(
        "Run %d/%d test=%d val=%d (%d/%d/%d windows)",
        run_index + 1,
        len(plan.runs),
        test_batch,
        val_batch,
        len(train_set),
        len(val_set),
        len(test_set),
    )
    model = train(train_set, val_set, config, table)
    scores = predict(model, test_set)
    targets = targets_for(test_set, config.task)
    report = RunReport(
        run_id=run_index,
        test_batch=test_batch,
        val_batch=val_batch,
        seed=config.seed,
        n_train=len(train_set),
        n_val=len(val_set),
        n_test=len(test_set),
        stopped_epoch=model.stopped_epoch,
        best_epoch=model.best_epoch,
    )
    if not config.is_classification:
        report.rmse = rmse(scores, targets)
        return report

    confusion = confusion_at(scores, targets, evaluate_config.threshold)
    computed = confusion_metrics(confusion)
    report.confusion = {"tp": confusion.tp, "fp": confusion.fp, "tn": confusion.tn, "fn": confusion.fn}
    report.metrics = computed.as_dict()
    report.undefined = list(computed.undefined)
    try:
        report.roc_points, report.auc = roc_auc(scores, targets)
    except UndefinedMetricError:
        logger.warning("Run %d: test batch has a single class, AUC undefined", run_index)
        report.undefined.append("auc")
    return report


_WORKER_STATE: Dict[str, object] = {}


def _init_worker(plan, windows, model_config, evaluate_config, table) -> None:
    _WORKER_STATE.update(
        plan=plan, windows=windows, model_config=model_config, evaluate_config=evaluate_config, table=table
    )


def _run_in_worker(run_index: int) -> RunReport:
    return execute_run(
        run_index,
        _WORKER_STATE["plan"],
        _WORKER_STATE["windows"],
        _WORKER_STATE["model_config"],
        _WORKER_STATE["evaluate_config"],
        _WORKER_STATE["table"],
    )


def run_nested_cv(
    windows: Sequence[WindowSample],
    task: str,
    model_config: Optional[ModelConfig] = None,
    evaluate_config: Optional[EvaluateConfig] = None,
    table: Optional[ActivityTable] = None,
    plan: Optional[FoldPlan] = None,
) -> Tuple[List[RunReport], SummaryReport]:
    """Train and evaluate one model per run; results do not depend on the worker count."""
    model_config = replace(model_config or ModelConfig(), task=task)
    evaluate_config = evaluate_config or EvaluateConfig()
    table = table or default_activity_table()
    task_windows = select_task_windows(windows, task, table)
    participants = {w.participant_id for w in task_windows}
    if plan is None:
        plan = make_fold_plan(
            sorted(participants), evaluate_config.n_batches, model_config.seed, evaluate_config.batch_layout
        )
    if plan.participants() != participants:
        unplanned = participants - plan.participants()
        raise IntegrityError(f"Participants outside the fold plan: {', '.join(sorted(unplanned)) or '(none)'}")
    for run_index in range(len(plan.runs)):
        check_split_integrity(plan, run_index, participants)

    logger.info(
        "Nested CV for %s: %d participants, %d batches, %d runs, %d workers",
        task,
        len(participants),
        len(plan.batches),
        len(plan.runs),
        evaluate_config.workers,
    )
    indices = range(len(plan.runs))
    if evaluate_config.workers > 1:
        with ProcessPoolExecutor(
            max_workers=evaluate_config.workers,
            initializer=_init_worker,
            initargs=(plan, task_windows, model_config, evaluate_config, table),
        ) as executor:
            runs = list(executor.map(_run_in_worker, indices))
    else:
        runs = [execute_run(i, plan, task_windows, model_config, evaluate_config, table) for i in indices]

    summary = summarize(runs, task, plan, model_config.is_classification, evaluate_config.roc_grid_points)
    return runs, summary
