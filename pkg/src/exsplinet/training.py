"""Empirical-risk minimization: squared loss, Adam, the minibatch loop,
evaluation metrics, and k-fold splitting.

Training operates on the flat raw-parameter vector; frozen inner blocks
receive exactly zero gradient, so their Adam moments stay zero and the
parameters never move. "Epoch" means one full pass over shuffled minibatches;
per-epoch train risk is recomputed on the full training set and the returned
model is the best epoch snapshot by that value.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff
from .dataio import Dataset
from .errors import DataError, InvalidHyperparameterError, ShapeMismatchError
from .model import ExSpliNetModel, param_count

__all__ = [
    "TrainConfig",
    "TrainReport",
    "AdamState",
    "adam_step",
    "empirical_risk",
    "train",
    "evaluate",
    "kfold",
    "fit_outer_least_squares",
    "write_metrics_csv",
]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop settings. ``loss`` is ``"squared"`` for regression
    targets or ``"one-hot-squared"`` for class labels (identical formula; the
    latter additionally requires labels on the dataset)."""

    epochs: int
    learning_rate: float = 0.001
    batch_size: int = 32
    seed: int = 0
    loss: str = "squared"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    eval_each_epoch: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidHyperparameterError("learning_rate must be > 0")
        if self.epochs < 1:
            raise InvalidHyperparameterError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidHyperparameterError("batch_size must be >= 1")
        if self.loss not in ("squared", "one-hot-squared"):
            raise InvalidHyperparameterError(f"unknown loss {self.loss!r}")


@dataclass
class TrainReport:
    """Per-epoch train risks, final test metrics, and run metadata."""

    train_risk: list[float] = field(default_factory=list)
    test_metric: list[float | None] = field(default_factory=list)
    final_test: dict = field(default_factory=dict)
    best_epoch: int = 0
    seconds: float = 0.0
    n_params: int = 0
    batch_size: int = 0


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


def adam_step(
    state: AdamState, params: np.ndarray, grads: np.ndarray, config: TrainConfig
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns the new state and parameters."""
    if state.m.shape != params.shape or grads.shape != params.shape:
        raise ShapeMismatchError("optimizer state, parameters, gradients must align")
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    new_params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return AdamState(m=m, v=v, t=t), new_params


def _check_loss(dataset: Dataset, loss: str) -> None:
    if loss == "one-hot-squared" and dataset.labels is None:
        raise DataError("one-hot-squared loss needs a dataset with class labels")


def empirical_risk(model: ExSpliNetModel, dataset: Dataset, loss: str = "squared") -> float:
    """Mean over samples of the summed squared output errors."""
    _check_loss(dataset, loss)
    E = model.forward_batch(dataset.inputs)
    if E.shape != dataset.targets.shape:
        raise ShapeMismatchError(
            f"model emits {E.shape[1]} outputs, targets have {dataset.targets.shape[1]}"
        )
    resid = E - dataset.targets
    return float(np.sum(resid * resid) / dataset.K)


def evaluate(model: ExSpliNetModel, dataset: Dataset, metric: str) -> float:
    """MSE or MAE over outputs, or argmax classification accuracy.

    Argmax ties break toward the lowest output index.
    """
    E = model.forward_batch(dataset.inputs)
    if metric in ("mse", "mae"):
        if E.shape != dataset.targets.shape:
            raise ShapeMismatchError("output arity does not match targets")
        diff = E - dataset.targets
        if metric == "mse":
            return float(np.mean(diff * diff))
        return float(np.mean(np.abs(diff)))
    if metric == "accuracy":
        if dataset.labels is None:
            raise DataError("accuracy needs a dataset with class labels")
        pred = np.argmax(E, axis=1)
        return float(np.mean(pred == dataset.labels))
    raise InvalidHyperparameterError(f"unknown metric {metric!r}")


def train(
    model: ExSpliNetModel,
    train_set: Dataset,
    test_set: Dataset | None,
    config: TrainConfig,
) -> tuple[ExSpliNetModel, TrainReport]:
    """Minibatch Adam on the empirical risk; returns the best epoch snapshot."""
    _check_loss(train_set, config.loss)
    if config.batch_size > train_set.K:
        raise InvalidHyperparameterError(
            f"batch_size {config.batch_size} exceeds dataset size {train_set.K}"
        )
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    theta = model.flat_params()
    state = AdamState.zeros(theta.size)
    report = TrainReport(n_params=param_count(model.config), batch_size=config.batch_size)
    test_metric_name = "accuracy" if config.loss == "one-hot-squared" else "mse"
    best_risk = np.inf
    best_theta = theta.copy()
    t0 = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(train_set.K)
        for start in range(0, train_set.K, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grad = autodiff.forward_and_risk_grad(
                model, train_set.inputs[idx], train_set.targets[idx]
            )
            state, theta = adam_step(state, theta, grad.flat(), config)
            model.set_flat_params(theta)
        risk = empirical_risk(model, train_set, config.loss)
        report.train_risk.append(risk)
        if config.eval_each_epoch and test_set is not None:
            report.test_metric.append(evaluate(model, test_set, test_metric_name))
        else:
            report.test_metric.append(None)
        if risk < best_risk:
            best_risk = risk
            best_theta = theta.copy()
            report.best_epoch = epoch
    model.set_flat_params(best_theta)
    if test_set is not None:
        report.final_test["mse"] = evaluate(model, test_set, "mse")
        report.final_test["mae"] = evaluate(model, test_set, "mae")
        if test_set.labels is not None:
            report.final_test["accuracy"] = evaluate(model, test_set, "accuracy")
    report.seconds = time.perf_counter() - t0
    return model, report


def kfold(dataset: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Seeded, size-balanced, disjoint train/test splits covering the dataset."""
    if k < 2:
        raise InvalidHyperparameterError("k must be >= 2")
    if dataset.K < k:
        raise InvalidHyperparameterError(f"k = {k} exceeds dataset size {dataset.K}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(dataset.K)
    folds = np.array_split(order, k)
    splits = []
    for i in range(k):
        test_idx = folds[i]
        train_idx = np.concatenate([folds[j] for j in range(k) if j != i])
        splits.append((dataset.subset(train_idx), dataset.subset(test_idx)))
    return splits


def fit_outer_least_squares(
    model: ExSpliNetModel, dataset: Dataset
) -> ExSpliNetModel:
    """Fit the outer weight tensors by linear least squares with the inner
    weights held fixed.

    With the inner features frozen the model is linear in the outer weights,
    so a single dense solve gives the optimum of the empirical risk. Intended
    for small tensors (the design matrix is ``K x (O·T·prod(M))`` per output).
    """
    cfg = model.config
    model = model.copy()
    Y = model.features_batch(dataset.inputs)  # (K, T, L)
    from .model import outer_basis  # local import to avoid a cycle at module load

    bases = [outer_basis(cfg, Y[:, :, l], l, 0) for l in range(cfg.L)]
    K = dataset.K
    design = bases[0].reshape(K, cfg.T, -1)
    for B in bases[1:]:
        design = (design[:, :, :, None] * B[:, :, None, :]).reshape(K, cfg.T, -1)
    design = design.reshape(K, -1)  # columns ordered (t, m_1, ..., m_L) C-style
    coef, *_ = np.linalg.lstsq(design, dataset.targets, rcond=None)
    w = coef.T.reshape((cfg.O, cfg.T) + cfg.M)
    model.outer.w = w
    return model


def write_metrics_csv(report: TrainReport, path) -> None:
    """Flat per-epoch table: epoch, train_risk, test_metric (blank when absent)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_risk", "test_metric"])
        for i, risk in enumerate(report.train_risk, start=1):
            tm = report.test_metric[i - 1]
            writer.writerow([i, f"{risk:.10g}", "" if tm is None else f"{tm:.10g}"])
