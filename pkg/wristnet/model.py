"""CNN-LSTM network assembly, weighted training with early stopping, and inference."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from .activities import ActivityTable
from .archive import WINDOW_SHAPE
from .config import ModelConfig, REGRESSION_TASK, TASKS
from .errors import DegenerateLabelsError, DimensionError, EmptyBatchError, IntegrityError, NumericError, ValidationError
from .nn import LayerKind, LayerSpec, LossKind, NetworkParameters, adam_step, init_parameters, loss, stack_backward, stack_forward
from .nn.tensor import Tensor, as_tensor
from .preprocess import WindowSample, label_windows, met_targets, stack_windows, task_labels

logger = logging.getLogger("wristnet.model")

PREDICT_CHUNK = 256

T = TypeVar("T")


def network_layers(task: str, kernel_width: int = 8, hidden_activation: str = "relu") -> List[LayerSpec]:
    if task not in TASKS:
        raise ValidationError(f"Unknown task '{task}'")
    head = "linear" if task == REGRESSION_TASK else "sigmoid"
    act = hidden_activation
    return [
        LayerSpec(LayerKind.CONV1D, 3, 16, kernel_width, act, "conv1d"),
        LayerSpec(LayerKind.CONV1D, 16, 32, kernel_width, act, "conv1d_1"),
        LayerSpec(LayerKind.CONV1D, 32, 64, kernel_width, act, "conv1d_2"),
        LayerSpec(LayerKind.LSTM, 64, 50, name="lstm"),
        LayerSpec(LayerKind.DENSE, 50, 10, activation=act, name="dense"),
        LayerSpec(LayerKind.DENSE, 10, 1, activation=head, name="dense_1"),
    ]


def build_network(
    task: str, seed: int = 0, kernel_width: int = 8, hidden_activation: str = "relu"
) -> NetworkParameters:
    return init_parameters(network_layers(task, kernel_width, hidden_activation), seed)


def loss_kind(task: str) -> LossKind:
    return LossKind.MEAN_SQUARED_ERROR if task == REGRESSION_TASK else LossKind.BINARY_CROSS_ENTROPY


def _binary_counts(labels) -> Tuple[int, int]:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyBatchError("No labels given")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValidationError("Labels must be 0 or 1")
    n1 = int(np.sum(labels == 1))
    n0 = int(labels.size - n1)
    if n0 == 0 or n1 == 0:
        raise DegenerateLabelsError(f"Both classes are required (got {n0} negatives, {n1} positives)")
    return n0, n1


def class_weights(labels) -> Tuple[float, float]:
    """Inverse-frequency weights w_c = N / (2 N_c)."""
    n0, n1 = _binary_counts(labels)
    n = n0 + n1
    return n / (2.0 * n0), n / (2.0 * n1)


def downsample_majority(
    samples: Union[Sequence[T], Tensor], labels, seed: int
) -> Tuple[Union[List[T], Tensor], Tensor]:
    """Keep every minority sample and an equal-size seeded subset of the majority, in order."""
    labels = np.asarray(labels)
    n0, n1 = _binary_counts(labels)
    if len(samples) != labels.size:
        raise DimensionError(f"{len(samples)} samples but {labels.size} labels")
    if n0 == n1:
        return samples, labels
    majority = 0 if n0 > n1 else 1
    majority_idx = np.flatnonzero(labels == majority)
    minority_idx = np.flatnonzero(labels != majority)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(majority_idx, size=minority_idx.size, replace=False)
    keep = np.sort(np.concatenate([minority_idx, chosen]))
    if isinstance(samples, np.ndarray):
        return samples[keep], labels[keep]
    return [samples[i] for i in keep], labels[keep]


class EarlyStopping:
    """Stop when the monitored loss has not improved for ``patience`` epochs; keep the best weights."""

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_params: Optional[NetworkParameters] = None
        self.wait = 0

    def update(self, epoch: int, val_loss: float, params: NetworkParameters) -> bool:
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_params = params
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


def target_scaling(targets: Tensor) -> Tuple[float, float]:
    """Mean and population SD of regression targets; SD falls back to 1 for constant targets."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise EmptyBatchError("No regression targets given")
    scale = float(np.std(targets))
    return float(np.mean(targets)), scale if scale > 1e-8 else 1.0


@dataclass
class TrainedModel:
    config: ModelConfig
    parameters: NetworkParameters
    history: List[Tuple[float, float]] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    # The regression head is fit to standardized MET; outputs map back via mean + scale * y.
    target_mean: float = 0.0
    target_scale: float = 1.0

    @property
    def layers(self) -> List[LayerSpec]:
        return network_layers(self.config.task, self.config.kernel_width, self.config.hidden_activation)

    def to_targets(self, raw: Tensor) -> Tensor:
        if self.config.is_classification:
            return raw
        return self.target_mean + self.target_scale * raw


def select_task_windows(
    windows: Sequence[WindowSample], task: str, table: Optional[ActivityTable] = None
) -> List[WindowSample]:
    classification, regression = label_windows(windows, table)
    return regression if task == REGRESSION_TASK else classification


def targets_for(windows: Sequence[WindowSample], task: str) -> Tensor:
    return met_targets(windows) if task == REGRESSION_TASK else task_labels(windows, task)


def forward_scores(
    layers: Sequence[LayerSpec], params: NetworkParameters, x: Tensor, chunk: int = PREDICT_CHUNK
) -> Tensor:
    outputs = []
    for start in range(0, x.shape[0], chunk):
        out, _ = stack_forward(layers, params, x[start : start + chunk])
        outputs.append(out.reshape(-1))
    return np.concatenate(outputs) if outputs else np.zeros(0)


def _validation_set(windows: Sequence[WindowSample], config: ModelConfig) -> Tuple[Tensor, Tensor]:
    y = targets_for(windows, config.task)
    if config.is_classification:
        try:
            windows, y = downsample_majority(list(windows), y, config.seed)
        except DegenerateLabelsError:
            logger.warning("Validation set for %s has a single class; monitoring it unbalanced", config.task)
    return stack_windows(windows), y


def train(
    train_set: Sequence[WindowSample],
    val_set: Sequence[WindowSample],
    config: ModelConfig,
    table: Optional[ActivityTable] = None,
) -> TrainedModel:
    """Train one network; the validation set only drives early stopping."""
    train_set = select_task_windows(train_set, config.task, table)
    val_set = select_task_windows(val_set, config.task, table)
    if not train_set or not val_set:
        raise EmptyBatchError(f"Empty {'training' if not train_set else 'validation'} set for {config.task}")
    shared = {w.participant_id for w in train_set} & {w.participant_id for w in val_set}
    if shared:
        raise IntegrityError(f"Participants in both training and validation sets: {', '.join(sorted(shared))}")

    layers = network_layers(config.task, config.kernel_width, config.hidden_activation)
    kind = loss_kind(config.task)
    x_train = stack_windows(train_set)
    y_train = targets_for(train_set, config.task)
    mean, scale = 0.0, 1.0
    if config.is_classification:
        w0, w1 = class_weights(y_train)
        weights = np.where(y_train == 1.0, w1, w0)
        logger.debug("Class weights %s: w0=%.4f w1=%.4f", config.task, w0, w1)
    else:
        weights = np.ones_like(y_train)
        mean, scale = target_scaling(y_train)
        y_train = (y_train - mean) / scale
        logger.debug("MET targets standardized with mean=%.4f sd=%.4f", mean, scale)
    x_val, y_val = _validation_set(val_set, config)
    # Losses are reported in target units (MET^2 for regression).
    loss_unit = scale * scale

    params = build_network(config.task, config.seed, config.kernel_width, config.hidden_activation)
    rng = np.random.default_rng([config.seed, 1])
    stopper = EarlyStopping(config.patience)
    history: List[Tuple[float, float]] = []
    n = x_train.shape[0]

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size), start=1):
            idx = order[start : start + config.batch_size]
            out, caches = stack_forward(layers, params, x_train[idx])
            value, grad = loss(out.reshape(-1), y_train[idx], kind, weights[idx])
            if not np.isfinite(value):
                raise NumericError(f"Non-finite training loss at epoch {epoch}, batch {batch}")
            _, grads = stack_backward(layers, grad.reshape(out.shape), caches)
            try:
                params = adam_step(
                    params,
                    grads,
                    lr=config.learning_rate,
                    beta1=config.beta1,
                    beta2=config.beta2,
                    eps=config.epsilon,
                )
            except NumericError as exc:
                raise NumericError(f"Epoch {epoch}, batch {batch}: {exc}") from exc
            total += value * loss_unit * idx.size
            logger.debug("epoch %d batch %d loss %.6f", epoch, batch, value * loss_unit)

        train_loss = total / n
        val_loss, _ = loss(mean + scale * forward_scores(layers, params, x_val), y_val, kind)
        if not np.isfinite(val_loss):
            raise NumericError(f"Non-finite validation loss at epoch {epoch}")
        history.append((train_loss, val_loss))
        logger.info("%s epoch %d/%d train_loss=%.5f val_loss=%.5f", config.task, epoch, config.epochs, train_loss, val_loss)
        if stopper.update(epoch, val_loss, params):
            logger.info("Early stop after epoch %d; restoring epoch %d", epoch, stopper.best_epoch)
            break

    return TrainedModel(
        config=config,
        parameters=stopper.best_params if stopper.best_params is not None else params,
        history=history,
        stopped_epoch=len(history),
        best_epoch=stopper.best_epoch,
        target_mean=mean,
        target_scale=scale,
    )


def predict(model: TrainedModel, windows: Union[Tensor, Sequence[WindowSample]]) -> Tensor:
    """Scores [N]: probabilities for classification, MET for regression."""
    if not isinstance(windows, np.ndarray) and len(windows) and isinstance(windows[0], WindowSample):
        x = stack_windows(windows)
    else:
        x = as_tensor(windows, "windows")
        if x.ndim == 2:
            x = x[None]
    if x.ndim != 3 or x.shape[1:] != WINDOW_SHAPE:
        raise DimensionError(f"Windows must be shaped {WINDOW_SHAPE}, got {x.shape}")
    return model.to_targets(forward_scores(model.layers, model.parameters, x))
