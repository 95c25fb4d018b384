"""Classification and regression metrics: confusion ratios, ROC/AUC, vertical ROC averaging, RMSE."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import auc, confusion_matrix, mean_squared_error, roc_curve

from .errors import DimensionError, EmptyBatchError, UndefinedMetricError, ValidationError

logger = logging.getLogger("wristnet.metrics")

METRIC_NAMES = ("sensitivity", "specificity", "precision", "f1", "balanced_accuracy")

RocPoints = List[Tuple[float, float]]


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class ConfusionMetrics:
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    f1: Optional[float]
    balanced_accuracy: Optional[float]
    undefined: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict[str, Optional[float]]:
        values = asdict(self)
        values.pop("undefined")
        return values


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def confusion_metrics(confusion: Confusion) -> ConfusionMetrics:
    """Ratios with a zero denominator are reported as None and listed in ``undefined``."""
    sensitivity = _ratio(confusion.tp, confusion.tp + confusion.fn)
    specificity = _ratio(confusion.tn, confusion.tn + confusion.fp)
    precision = _ratio(confusion.tp, confusion.tp + confusion.fp)
    f1 = None
    if precision is not None and sensitivity is not None and precision + sensitivity > 0:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    balanced = None
    if sensitivity is not None and specificity is not None:
        balanced = (sensitivity + specificity) / 2.0
    metrics = ConfusionMetrics(sensitivity, specificity, precision, f1, balanced)
    metrics.undefined = [name for name in METRIC_NAMES if getattr(metrics, name) is None]
    if metrics.undefined:
        logger.warning("Undefined metrics for %s: %s", confusion, ", ".join(metrics.undefined))
    return metrics


def _binary(scores: Sequence[float], labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise DimensionError(f"{scores.size} scores but {labels.size} labels")
    if scores.size == 0:
        raise EmptyBatchError("No scores given")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValidationError("Labels must be 0 or 1")
    return scores, labels.astype(int)


def confusion_at(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> Confusion:
    scores, labels = _binary(scores, labels)
    predicted = (scores >= threshold).astype(int)
    tn, fp, fn, tp = confusion_matrix(labels, predicted, labels=[0, 1]).ravel()
    return Confusion(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> Tuple[RocPoints, float]:
    """Full threshold sweep from (0, 0) to (1, 1) and trapezoidal AUC; tied scores give diagonal segments."""
    scores, labels = _binary(scores, labels)
    if labels.min() == labels.max():
        raise UndefinedMetricError("AUC is undefined when only one class is present")
    fpr, tpr, _ = roc_curve(labels, scores, drop_intermediate=False)
    points = [(float(x), float(y)) for x, y in zip(fpr, tpr)]
    return points, float(auc(fpr, tpr))


def mean_roc(run_curves: Sequence[RocPoints], grid_points: int = 101) -> RocPoints:
    """Vertical averaging of TPR on a fixed FPR grid."""
    if not run_curves:
        raise ValidationError("mean_roc needs at least one curve")
    grid = np.linspace(0.0, 1.0, grid_points)
    interpolated = []
    for curve in run_curves:
        if not curve:
            raise ValidationError("mean_roc got an empty curve")
        points = np.asarray(curve, dtype=np.float64)
        fpr, tpr = points[:, 0], points[:, 1]
        unique_fpr = np.unique(fpr)
        # Vertical segments collapse to their highest TPR.
        top_tpr = np.array([tpr[fpr == x].max() for x in unique_fpr])
        interpolated.append(np.interp(grid, unique_fpr, top_tpr))
    mean_tpr = np.mean(interpolated, axis=0)
    return [(float(x), float(y)) for x, y in zip(grid, mean_tpr)]


def rmse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.size == 0:
        raise EmptyBatchError("rmse called on empty input")
    if predictions.shape != targets.shape:
        raise DimensionError(f"{predictions.size} predictions but {targets.size} targets")
    return float(np.sqrt(mean_squared_error(targets, predictions)))
