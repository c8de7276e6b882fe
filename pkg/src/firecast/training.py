"""Training loop: sliding-window epochs, Adam updates, best-epoch tracking.

Each epoch visits every training window in seeded-shuffled mini-batches,
takes one Adam step per batch, then records MAE/RMSE in original units
(loss stays in normalized units).  The checkpoint keeps the parameters
from the best epoch under the selection metric, earliest epoch winning
ties.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import network
from .dataset import (MonthlySeries, NormalizationParams, SplitBounds,
                      WindowedDataset, fit_normalizer, make_windows, split)
from .errors import DataError, NumericError, ShapeError
from .network import StackedModel, backward_batch, forward_batch, init_model
from .optim import Adam, AdamConfig


class Loss(Enum):
    MAE = "mae"
    MSE = "mse"


class Selection(Enum):
    VALIDATION_MAE = "validation_mae"
    TRAIN_MAE = "train_mae"


@dataclass
class TrainConfig:
    epochs: int = 1000
    seed: int = 2024
    loss: Loss = Loss.MAE
    batch_size: int = 32
    hidden: int = 256
    window: int = 12
    adam: AdamConfig = field(default_factory=AdamConfig)
    selection: Selection | None = None  # None = follow the training mode

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_mae: float
    train_rmse: float
    val_mae: float | None = None
    val_rmse: float | None = None


@dataclass
class Checkpoint:
    model: StackedModel
    norm: NormalizationParams
    config: TrainConfig
    best_epoch: int
    history: list[EpochRecord]
    rng_name: str = network.RNG_NAME


class TrainingAborted(NumericError):
    """Raised when loss or gradients go non-finite mid-run.

    Carries the best checkpoint completed before the failure (None if
    no epoch finished).
    """

    def __init__(self, message: str, checkpoint: Checkpoint | None):
        super().__init__(message)
        self.checkpoint = checkpoint


def mae(y, yhat) -> float:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise ShapeError(f"need equal non-empty 1-D sequences, got {y.shape} "
                         f"and {yhat.shape}")
    return float(np.mean(np.abs(y - yhat)))


def rmse(y, yhat) -> float:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise ShapeError(f"need equal non-empty 1-D sequences, got {y.shape} "
                         f"and {yhat.shape}")
    d = y - yhat
    return float(np.sqrt(np.mean(d * d)))


def _loss_and_grad(preds: np.ndarray, targets: np.ndarray, loss: Loss):
    """Mean loss over the batch and its derivative w.r.t. each prediction."""
    diff = preds - targets
    n = preds.size
    if loss is Loss.MAE:
        return float(np.mean(np.abs(diff))), np.sign(diff) / n
    return float(np.mean(diff * diff)), 2.0 * diff / n


def _predict_all(model: StackedModel, ds: WindowedDataset, lo: int, hi: int) -> np.ndarray:
    preds, _ = forward_batch(model, ds.inputs[lo:hi])
    return preds


def train(series: MonthlySeries, cfg: TrainConfig, use_full_data: bool = False,
          log=None) -> Checkpoint:
    """Fit the stacked model on the series; returns the best-epoch checkpoint.

    Split mode (default) trains on the training split and selects by
    validation MAE; full-data mode trains on every window and selects by
    training MAE.
    """
    if use_full_data:
        bounds = None
        norm = fit_normalizer(series.values)
        if len(series) <= cfg.window:
            raise DataError(f"series of {len(series)} months cannot fill a "
                            f"{cfg.window}-month window")
    else:
        bounds = split(series)
        if bounds.train_end <= cfg.window:
            raise DataError("training split has no window targets")
        norm = fit_normalizer(series.values[:bounds.train_end])

    selection = cfg.selection
    if selection is None:
        selection = Selection.TRAIN_MAE if use_full_data else Selection.VALIDATION_MAE
    if use_full_data and selection is Selection.VALIDATION_MAE:
        raise DataError("full-data mode has no validation split to select on")

    ds = make_windows(norm.apply(series.values), cfg.window, bounds)
    if use_full_data:
        train_lo, train_hi = 0, len(ds)
        val_range = None
    else:
        train_lo, train_hi = ds.sample_range("train")
        val_range = ds.sample_range("validation")
    n_train = train_hi - train_lo

    model = init_model(cfg.hidden, cfg.window, cfg.seed)
    params = model.named_params()
    opt = Adam(config=cfg.adam)
    orig = series.values

    history: list[EpochRecord] = []
    best: tuple[float, int] | None = None
    best_model: StackedModel | None = None

    def snapshot() -> Checkpoint | None:
        if best_model is None:
            return None
        return Checkpoint(model=best_model, norm=norm,
                          config=replace(cfg, selection=selection),
                          best_epoch=best[1], history=list(history))

    for epoch in range(1, cfg.epochs + 1):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n_train) + train_lo
        loss_sum = 0.0
        try:
            for at in range(0, n_train, cfg.batch_size):
                batch = order[at:at + cfg.batch_size]
                preds, trace = forward_batch(model, ds.inputs[batch])
                loss_val, dpred = _loss_and_grad(preds, ds.targets[batch], cfg.loss)
                if not np.isfinite(loss_val):
                    raise NumericError(f"loss became non-finite at epoch {epoch}")
                loss_sum += loss_val * batch.size
                grads = backward_batch(model, trace, dpred)
                opt.step(params, grads)
        except NumericError as exc:
            raise TrainingAborted(str(exc), snapshot()) from exc

        train_pred = norm.invert(_predict_all(model, ds, train_lo, train_hi))
        train_true = orig[ds.target_index(train_lo):ds.target_index(train_hi)]
        rec = EpochRecord(epoch=epoch, loss=loss_sum / n_train,
                          train_mae=mae(train_true, train_pred),
                          train_rmse=rmse(train_true, train_pred))
        if val_range is not None:
            val_pred = norm.invert(_predict_all(model, ds, *val_range))
            val_true = orig[ds.target_index(val_range[0]):ds.target_index(val_range[1])]
            rec.val_mae = mae(val_true, val_pred)
            rec.val_rmse = rmse(val_true, val_pred)
        history.append(rec)
        if log is not None:
            log(rec)

        metric = rec.val_mae if selection is Selection.VALIDATION_MAE else rec.train_mae
        if not np.isfinite(metric):
            raise TrainingAborted(f"selection metric became non-finite at epoch {epoch}",
                                  snapshot())
        if best is None or metric < best[0]:
            best = (metric, epoch)
            best_model = model.copy()

    return snapshot()


@dataclass
class EvalResult:
    mae: float
    rmse: float
    months: list[str]
    actual: np.ndarray
    predicted: np.ndarray


def evaluate(ckpt: Checkpoint, series: MonthlySeries, split_name: str) -> EvalResult:
    """One-step-ahead metrics over a split, in original units.

    Inputs are teacher-forced from real history, so validation/test
    windows borrow context from the preceding split's tail.
    """
    window = ckpt.config.window
    bounds = split(series)
    ds = make_windows(ckpt.norm.apply(series.values), window, bounds)
    lo, hi = ds.sample_range(split_name)
    pred = ckpt.norm.invert(_predict_all(ckpt.model, ds, lo, hi))
    actual = series.values[ds.target_index(lo):ds.target_index(hi)]
    all_months = series.months()
    months = all_months[ds.target_index(lo):ds.target_index(hi)]
    return EvalResult(mae=mae(actual, pred), rmse=rmse(actual, pred),
                      months=months, actual=actual.copy(), predicted=pred)


def write_history_csv(history: list[EpochRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "train_mae", "train_rmse",
                         "val_mae", "val_rmse"])
        for rec in history:
            writer.writerow([
                rec.epoch, repr(rec.loss), repr(rec.train_mae), repr(rec.train_rmse),
                "" if rec.val_mae is None else repr(rec.val_mae),
                "" if rec.val_rmse is None else repr(rec.val_rmse),
            ])
