"""Offline training of the corrector and the online correction step.

The loss is mean squared error over the three error components plus an
L1 penalty on the dense weights. Adam drives the updates; the
parameters returned are the ones from the best validation epoch.

The configured learning rate defaults to the very conservative 1e-8.
With millimeter labels that rate stalls, so an optional auto-scaling
mode multiplies it by 1000 whenever the validation loss has not
improved for ``stagnation_epochs`` epochs (bounded by
``max_learning_rate``); every scaling event lands in the history.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from effpose.nn.model import MLPModel
from effpose.seeding import derived_rng
from effpose.nn.layers import Adam
from effpose.robot.dataset import Dataset, reported_position


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-8
    epochs: int = 10000
    batch_size: int = 1024
    l1_rate: float = 5e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    hidden: tuple = (600, 500, 400)
    lr_auto_scale: bool = False
    stagnation_epochs: int = 200
    lr_scale_factor: float = 1000.0
    max_learning_rate: float = 1e-2
    # plateau decay: shrink the rate when validation stalls (0 disables)
    lr_plateau_decay: float = 0.0
    lr_plateau_epochs: int = 12
    min_learning_rate: float = 1e-6
    early_stop_patience: int = 0  # 0 disables early stopping

    def __post_init__(self):
        for name in ("learning_rate", "epochs", "batch_size", "beta1", "beta2",
                     "adam_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.l1_rate < 0:
            raise ValueError("l1_rate must be >= 0")


@dataclass
class TrainingHistory:
    epochs: list = field(default_factory=list)       # epoch index
    train_loss: list = field(default_factory=list)   # MSE + L1 on train batches
    val_loss: list = field(default_factory=list)     # MSE on validation
    val_rms_mm: list = field(default_factory=list)   # 3D RMS on validation
    lr_events: list = field(default_factory=list)    # (epoch, new lr)
    best_epoch: int = -1


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, history: TrainingHistory):
        super().__init__(message)
        self.history = history


def _normalize_stats(features: np.ndarray):
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)  # constant features stay untouched
    return mean, std


def _val_metrics(model: MLPModel, x_val, y_val, batch: int = 8192):
    preds = []
    for i in range(0, len(x_val), batch):
        preds.append(model.forward(x_val[i:i + batch], train=False))
    pred = np.vstack(preds)
    err = pred - y_val
    mse = float(np.mean(err**2))
    rms = float(np.sqrt(np.mean(np.sum(err**2, axis=1))))
    return mse, rms


def train(ds_train: Dataset, ds_val: Dataset,
          cfg: TrainingConfig = TrainingConfig()):
    """Fit the corrector; returns (model, history).

    Normalization statistics come from the training split only and are
    stored inside the model. Aborts with :class:`TrainingDiverged` if
    the loss goes non-finite.
    """
    if cfg.batch_size > len(ds_train):
        raise ValueError("batch size exceeds training set size")
    train_ids = set(np.unique(ds_train.trajectory_ids).tolist())
    val_ids = set(np.unique(ds_val.trajectory_ids).tolist())
    if train_ids & val_ids:
        raise ValueError("training and validation share trajectories")

    mean, std = _normalize_stats(ds_train.features)
    x_train = (ds_train.features - mean) / std
    y_train = ds_train.labels
    x_val = (ds_val.features - mean) / std
    y_val = ds_val.labels

    model = MLPModel(n_in=x_train.shape[1], hidden=cfg.hidden,
                     n_out=y_train.shape[1], seed=cfg.seed)
    model.feature_mean = mean
    model.feature_std = std

    optimizer = Adam(model.param_triples(), cfg.learning_rate,
                     cfg.beta1, cfg.beta2, cfg.adam_eps)
    rng = derived_rng(cfg.seed, "shuffle")
    history = TrainingHistory()
    best = (np.inf, None, -1)  # (val mse, snapshot, epoch)
    since_improve = 0

    n = len(x_train)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if idx.size < 2:
                continue  # batch norm needs at least two samples
            xb, yb = x_train[idx], y_train[idx]
            pred = model.forward(xb, train=True)
            err = pred - yb
            mse = float(np.mean(err**2))
            l1 = cfg.l1_rate * sum(float(np.abs(W).sum())
                                   for W, _ in model.weight_arrays())
            loss = mse + l1
            if not np.isfinite(loss):
                history.best_epoch = best[2]
                raise TrainingDiverged(
                    f"loss became non-finite at epoch {epoch}", history)
            epoch_losses.append(loss)

            model.backward(2.0 * err / err.size)
            if cfg.l1_rate > 0:
                for W, dW in model.weight_arrays():
                    dW += cfg.l1_rate * np.sign(W)
            optimizer.step([g for _, _, g in model.param_triples()])

        val_mse, val_rms = _val_metrics(model, x_val, y_val)
        history.epochs.append(epoch)
        history.train_loss.append(float(np.mean(epoch_losses)))
        history.val_loss.append(val_mse)
        history.val_rms_mm.append(val_rms)

        if val_mse < best[0] - 1e-12:
            best = (val_mse, model.snapshot(), epoch)
            since_improve = 0
        else:
            since_improve += 1

        if cfg.lr_auto_scale and since_improve >= cfg.stagnation_epochs:
            new_lr = min(optimizer.lr * cfg.lr_scale_factor, cfg.max_learning_rate)
            if new_lr > optimizer.lr:
                optimizer.lr = new_lr
                history.lr_events.append((epoch, new_lr))
                since_improve = 0
        if cfg.lr_plateau_decay > 0 and since_improve >= cfg.lr_plateau_epochs:
            new_lr = max(optimizer.lr * cfg.lr_plateau_decay, cfg.min_learning_rate)
            if new_lr < optimizer.lr:
                # resume from the best parameters before digging deeper
                if best[1] is not None:
                    model.load_state(best[1])
                optimizer.lr = new_lr
                history.lr_events.append((epoch, new_lr))
                since_improve = 0
        if cfg.early_stop_patience and since_improve >= cfg.early_stop_patience:
            break

    if best[1] is not None:
        model.load_state(best[1])
        history.best_epoch = best[2]
    return model, history


def correct_position(model: MLPModel, record) -> np.ndarray:
    """Reported position plus the predicted error: the corrected estimate.

    ``record`` is a RavenStateRecord or a bare 118-float vector.
    """
    values = getattr(record, "values", record)
    values = np.asarray(values, dtype=float)
    return reported_position(values) + model.predict(values)


def write_history(path, history: TrainingHistory) -> None:
    with open(path, "w") as fh:
        fh.write("# epoch train_loss val_loss val_rms_mm\n")
        for i, epoch in enumerate(history.epochs):
            fh.write(f"{epoch} {history.train_loss[i]:.17g} "
                     f"{history.val_loss[i]:.17g} {history.val_rms_mm[i]:.17g}\n")
        for epoch, lr in history.lr_events:
            fh.write(f"# lr_scaled epoch={epoch} lr={lr:.3g}\n")
        fh.write(f"# best_epoch {history.best_epoch}\n")
