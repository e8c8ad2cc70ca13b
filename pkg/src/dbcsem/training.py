"""Loss functions and the randomized-episode training loop.

Each step draws one episode (SNR of the worse channel, SNR gap, fusion
ratio), runs the transmitter, both user pipelines and the branch-selected
scalarized loss, and applies one joint Adam update to every parameter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dbcsem import models, tensor as T
from dbcsem.channel import awgn, snr_db_to_noise_power, substream
from dbcsem.data import Dataset, paired_batches
from dbcsem.models import ParamStore, SystemConfig
from dbcsem.tensor import NumericalError, Tensor

TRAIN_LOG_HEADER = ["epoch", "step", "alpha", "snr1_db", "snr2_db", "loss", "L1", "L2"]


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    lam: float = 6.0
    beta: float = 1.0 / 60.0  # lam * beta = 0.1 at the default lam
    epochs_phase1: int = 100
    lr_phase1: float = 1e-4
    epochs_phase2: int = 50
    lr_phase2: float = 1e-5
    batch_size: int = 128
    snr1_range_db: tuple[float, float] = (-5.0, 5.0)
    gamma_max_db: float = 10.0  # gamma is drawn from (0, gamma_max_db]
    alpha_grid: tuple[float, ...] = models.DEFAULT_ALPHA_GRID
    seed: int = 0
    reshuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.lam <= 0 or self.beta < 0:
            raise ConfigError(f"need lam > 0 and beta >= 0, got lam={self.lam}, beta={self.beta}")
        if self.gamma_max_db <= 0:
            raise ConfigError("gamma_max_db must be > 0 (equal-SNR episodes are rejected)")
        if self.snr1_range_db[0] > self.snr1_range_db[1]:
            raise ConfigError(f"bad snr1 range {self.snr1_range_db}")

    def to_dict(self) -> dict:
        return {
            "lam": self.lam, "beta": self.beta,
            "epochs_phase1": self.epochs_phase1, "lr_phase1": self.lr_phase1,
            "epochs_phase2": self.epochs_phase2, "lr_phase2": self.lr_phase2,
            "batch_size": self.batch_size, "snr1_range_db": list(self.snr1_range_db),
            "gamma_max_db": self.gamma_max_db, "alpha_grid": list(self.alpha_grid),
            "seed": self.seed, "reshuffle_each_epoch": self.reshuffle_each_epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        for key in ("snr1_range_db", "alpha_grid"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class EpisodeConfig:
    snr1_db: float
    snr2_db: float
    alpha: float

    def __post_init__(self):
        if not self.snr2_db > self.snr1_db:
            raise ConfigError(f"episode requires snr2 > snr1, got {self.snr1_db}, {self.snr2_db}")


def loss_worse(z1: Tensor, s1: Tensor) -> Tensor:
    """MSE between the worse user's reconstruction and its source."""
    return T.mse(z1, s1)


def loss_better(z2: Tensor, s2: Tensor, z1_tilde: Tensor, s1: Tensor, beta: float) -> Tensor:
    """MSE(z2, s2) + beta * MSE(z1_tilde, s1)."""
    out = T.mse(z2, s2)
    if beta != 0.0:
        out = T.add(out, T.scale(T.mse(z1_tilde, s1), beta))
    return out


def total_loss(l1: Tensor, l2: Tensor, lam: float, alpha: float) -> Tensor:
    """Branch-selected scalarized objective.

    alpha=0 -> l2 (the caller must have computed l2 with beta forced to 0);
    alpha=1 -> l1; otherwise l1 + lam * l2.
    """
    if alpha == 0.0:
        return l2
    if alpha == 1.0:
        return l1
    return T.add(l1, T.scale(l2, lam))


def sample_episode(tc: TrainConfig, rng: np.random.Generator) -> EpisodeConfig:
    """Independent uniform draws of SNR1, the SNR gap, and the fusion ratio."""
    lo, hi = tc.snr1_range_db
    snr1 = float(rng.uniform(lo, hi))
    gamma = tc.gamma_max_db - float(rng.uniform(0.0, tc.gamma_max_db))  # in (0, max]
    alpha = float(tc.alpha_grid[int(rng.integers(len(tc.alpha_grid)))])
    return EpisodeConfig(snr1_db=snr1, snr2_db=snr1 + gamma, alpha=alpha)


@dataclass
class LogRow:
    epoch: int
    step: int
    alpha: float
    snr1_db: float
    snr2_db: float
    loss: float
    l1: float
    l2: float

    def as_csv(self) -> list[str]:
        return [
            str(self.epoch), str(self.step), f"{self.alpha:.10g}",
            f"{self.snr1_db:.10g}", f"{self.snr2_db:.10g}",
            f"{self.loss:.10g}", f"{self.l1:.10g}", f"{self.l2:.10g}",
        ]


def write_train_log(rows: list[LogRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAIN_LOG_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())


def train_step(store: ParamStore, s1: np.ndarray, s2: np.ndarray, ep: EpisodeConfig,
               tc: TrainConfig, optimizer: T.Adam, rng1: np.random.Generator,
               rng2: np.random.Generator) -> tuple[float, float, float]:
    """One Algorithm-1 iteration; returns (loss, L1, L2)."""
    s1_t, s2_t = Tensor(s1), Tensor(s2)
    y = models.transmit(store, s1_t, s2_t, ep.snr1_db, ep.snr2_db, ep.alpha)
    y1 = awgn(y, snr_db_to_noise_power(ep.snr1_db), rng1)
    y2 = awgn(y, snr_db_to_noise_power(ep.snr2_db), rng2)
    z1 = models.worse_user_pipeline(store, y1, ep.snr1_db, ep.alpha)
    l1 = loss_worse(z1, s1_t)
    z1_tilde, z2 = models.better_user_pipeline(store, y2, ep.snr2_db, ep.alpha)
    beta_eff = 0.0 if ep.alpha == 0.0 else tc.beta
    l2 = loss_better(z2, s2_t, z1_tilde, s1_t, beta_eff)
    loss = total_loss(l1, l2, tc.lam, ep.alpha)
    if not np.isfinite(loss.data):
        raise NumericalError("non-finite loss")
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return loss.data.item(), l1.data.item(), l2.data.item()


def train_point_to_point(dataset: Dataset, cfg: SystemConfig,
                         tc: TrainConfig) -> tuple[ParamStore, list[LogRow]]:
    """Single-user reference model trained under the same episode protocol.

    Mirrors train() step for step (same epochs, batching, episode draws and
    optimizer schedule) but drives the dedicated single-user pipeline with a
    plain reconstruction MSE, so the result is comparable to the fusion model
    evaluated at a degenerate fusion ratio.
    """
    if dataset.images.shape[1] != cfg.source_dim:
        raise ConfigError(
            f"dataset pixel count {dataset.images.shape[1]} != config source dim {cfg.source_dim}"
        )
    store = models.build_point_to_point(cfg, tc.seed)
    optimizer = T.Adam(store.tensors, lr=tc.lr_phase1)
    episode_rng = substream(tc.seed, 0xE915)
    rows: list[LogRow] = []
    step = 0
    total_epochs = tc.epochs_phase1 + tc.epochs_phase2
    for epoch in range(total_epochs):
        optimizer.lr = tc.lr_phase1 if epoch < tc.epochs_phase1 else tc.lr_phase2
        batches = paired_batches(dataset, tc.batch_size, tc.seed, epoch, tc.reshuffle_each_epoch)
        for b, (s1, _s2) in enumerate(batches):
            ep = sample_episode(tc, episode_rng)
            rng1 = substream(tc.seed, 0xC4A7, epoch, b, 1)
            s1_t = Tensor(s1)
            y = models.point_to_point_transmit(store, s1_t, ep.snr1_db)
            y1 = awgn(y, snr_db_to_noise_power(ep.snr1_db), rng1)
            z = models.point_to_point_receive(store, y1, ep.snr1_db)
            loss = T.mse(z, s1_t)
            if not np.isfinite(loss.data):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {b}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            val = loss.data.item()
            rows.append(LogRow(epoch, step, 1.0, ep.snr1_db, ep.snr2_db, val, val, 0.0))
            step += 1
    return store, rows


def train(dataset: Dataset, cfg: SystemConfig, tc: TrainConfig) -> tuple[ParamStore, list[LogRow]]:
    """Full two-phase training of the fusion scheme; deterministic given the seed."""
    if dataset.images.shape[1] != cfg.source_dim:
        raise ConfigError(
            f"dataset pixel count {dataset.images.shape[1]} != config source dim {cfg.source_dim}"
        )
    store = models.build_proposed(cfg, tc.seed)
    optimizer = T.Adam(store.tensors, lr=tc.lr_phase1)
    episode_rng = substream(tc.seed, 0xE915)
    rows: list[LogRow] = []
    step = 0
    total_epochs = tc.epochs_phase1 + tc.epochs_phase2
    for epoch in range(total_epochs):
        optimizer.lr = tc.lr_phase1 if epoch < tc.epochs_phase1 else tc.lr_phase2
        batches = paired_batches(dataset, tc.batch_size, tc.seed, epoch, tc.reshuffle_each_epoch)
        for b, (s1, s2) in enumerate(batches):
            ep = sample_episode(tc, episode_rng)
            rng1 = substream(tc.seed, 0xC4A7, epoch, b, 1)
            rng2 = substream(tc.seed, 0xC4A7, epoch, b, 2)
            try:
                loss, l1, l2 = train_step(store, s1, s2, ep, tc, optimizer, rng1, rng2)
            except NumericalError as exc:
                raise NumericalError(f"{exc} at epoch {epoch}, batch {b}") from exc
            rows.append(LogRow(epoch, step, ep.alpha, ep.snr1_db, ep.snr2_db, loss, l1, l2))
            step += 1
    return store, rows
