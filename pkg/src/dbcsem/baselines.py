"""Classical broadcast baselines in the learned-latent setting.

Time division (TD): each source gets its own encoder/decoder pair and a
disjoint share of the k channel uses. Power allocation (PA): both sources
are encoded to k unit-power symbol streams and superposed as
sqrt(p1)*u1 + sqrt(p2)*u2; the worse user decodes treating the other
stream as noise, the better user runs successive interference
cancellation (decode s1, re-encode with the transmitter's user-1 encoder,
subtract the scaled estimate, decode s2).

Both baselines reuse the fusion scheme's SE/SD stack widths and the same
randomized-episode training protocol. Channel-adaptive (CA) variants feed
the operating SNR into the attention/de-fusion conditioning slot;
non-CA variants feed a constant 0 there, so their outputs are exactly
invariant to the channel state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dbcsem import models, tensor as T
from dbcsem.channel import awgn, snr_db_to_noise_power, substream
from dbcsem.data import Dataset, paired_batches
from dbcsem.models import SNR_SCALE, ParamStore, SystemConfig, _with_cond
from dbcsem.tensor import NumericalError, Tensor
from dbcsem.training import EpisodeConfig, LogRow, TrainConfig, sample_episode


class ConfigError(ValueError):
    pass


@dataclass
class TdConfig:
    time_share: float  # fraction of channel uses assigned to user 1
    channel_adaptive: bool = True

    def __post_init__(self):
        if not 0.0 < self.time_share < 1.0:
            raise ConfigError(f"time share {self.time_share} outside (0, 1)")

    def budgets(self, k: int) -> tuple[int, int]:
        k1 = math.floor(self.time_share * k)
        k2 = k - k1
        if k1 < 1 or k2 < 1:
            raise ConfigError(f"degenerate symbol budgets ({k1}, {k2}) for k={k}")
        return k1, k2


@dataclass
class PaConfig:
    p1: float  # power share of user 1's stream; p2 = 1 - p1
    channel_adaptive: bool = True

    def __post_init__(self):
        if not 0.0 < self.p1 < 1.0:
            raise ConfigError(f"power split p1={self.p1} outside (0, 1)")


def _cond(snr_db: float, channel_adaptive: bool) -> float:
    return snr_db * SNR_SCALE if channel_adaptive else 0.0


def build_td(cfg: SystemConfig, td: TdConfig, seed: int) -> ParamStore:
    store = ParamStore(cfg)
    rng = models._param_rng(seed, 2)
    d, l = cfg.source_dim, cfg.l
    for i, ki in zip((1, 2), td.budgets(cfg.k)):
        store.add_mlp(f"td.enc{i}", [d, *cfg.enc_hidden, l], None, rng)
        store.add_mlp(f"td.attn{i}", [l + 1, *cfg.attn_hidden, l], "sigmoid", rng)
        store.add_mlp(f"td.mod{i}", [l, ki], None, rng)
        store.add_mlp(f"td.df{i}", [ki + 1, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
        store.add_mlp(f"td.dec{i}", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    return store


def build_pa(cfg: SystemConfig, seed: int) -> ParamStore:
    store = ParamStore(cfg)
    rng = models._param_rng(seed, 3)
    d, k, l = cfg.source_dim, cfg.k, cfg.l
    for i in (1, 2):
        store.add_mlp(f"pa.enc{i}", [d, *cfg.enc_hidden, l], None, rng)
        store.add_mlp(f"pa.attn{i}", [l + 1, *cfg.attn_hidden, l], "sigmoid", rng)
        store.add_mlp(f"pa.mod{i}", [l, k], None, rng)
    store.add_mlp("pa.df1w", [k + 1, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("pa.dec1w", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    store.add_mlp("pa.df1b", [k + 1, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("pa.dec1b", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    store.add_mlp("pa.df2", [k + 1, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("pa.dec2", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    return store


def _user_encode(store: ParamStore, prefix: str, i: int, s: Tensor, cond: float) -> Tensor:
    """Per-user transmitter: SE, SNR-attention mask, modulation MLP, unit power."""
    xe = store.forward(f"{prefix}.enc{i}", s)
    c = store.forward(f"{prefix}.attn{i}", _with_cond(xe, cond))
    u = store.forward(f"{prefix}.mod{i}", T.mul_elem(xe, c))
    return T.power_normalize(T.tanh(u))


def _user_decode(store: ParamStore, df: str, dec: str, y_rx: Tensor, cond: float) -> Tensor:
    return store.forward(dec, store.forward(df, _with_cond(y_rx, cond)))


def td_round_trip(store: ParamStore, s1: Tensor, s2: Tensor, td: TdConfig,
                  snr1_db: float, snr2_db: float, rng1: np.random.Generator,
                  rng2: np.random.Generator) -> tuple[Tensor, Tensor]:
    """Two fully separate pipelines over disjoint time slots."""
    c1 = _cond(snr1_db, td.channel_adaptive)
    c2 = _cond(snr2_db, td.channel_adaptive)
    u1 = _user_encode(store, "td", 1, s1, c1)
    u2 = _user_encode(store, "td", 2, s2, c2)
    y1 = awgn(u1, snr_db_to_noise_power(snr1_db), rng1)
    y2 = awgn(u2, snr_db_to_noise_power(snr2_db), rng2)
    z1 = _user_decode(store, "td.df1", "td.dec1", y1, c1)
    z2 = _user_decode(store, "td.df2", "td.dec2", y2, c2)
    return z1, z2


def pa_superpose(u1: Tensor, u2: Tensor, p1: float) -> Tensor:
    """sqrt(p1)*u1 + sqrt(1-p1)*u2; p1=1 is allowed as a boundary test value."""
    if not 0.0 < p1 <= 1.0:
        raise ConfigError(f"power split p1={p1} outside (0, 1]")
    if u1.shape != u2.shape:
        raise T.ShapeError(f"pa_superpose: shapes {u1.shape} != {u2.shape}")
    if p1 == 1.0:
        return u1
    return T.add(T.scale(u1, math.sqrt(p1)), T.scale(u2, math.sqrt(1.0 - p1)))


def pa_transmit(store: ParamStore, s1: Tensor, s2: Tensor, pa: PaConfig,
                snr1_db: float, snr2_db: float) -> Tensor:
    u1 = _user_encode(store, "pa", 1, s1, _cond(snr1_db, pa.channel_adaptive))
    u2 = _user_encode(store, "pa", 2, s2, _cond(snr2_db, pa.channel_adaptive))
    return pa_superpose(u1, u2, pa.p1)


def pa_worse_receive(store: ParamStore, y1: Tensor, pa: PaConfig, snr1_db: float) -> Tensor:
    """Worse user decodes its own image, treating the other stream as noise."""
    return _user_decode(store, "pa.df1w", "pa.dec1w", y1, _cond(snr1_db, pa.channel_adaptive))


def pa_sic_receive(store: ParamStore, y2: Tensor, pa: PaConfig, snr1_db: float,
                   snr2_db: float) -> tuple[Tensor, Tensor]:
    """Better user: decode s1, re-encode, subtract, decode s2 from the residual."""
    c2 = _cond(snr2_db, pa.channel_adaptive)
    z1_tilde = _user_decode(store, "pa.df1b", "pa.dec1b", y2, c2)
    u1_hat = _user_encode(store, "pa", 1, z1_tilde, _cond(snr1_db, pa.channel_adaptive))
    residual = T.scale(T.sub(y2, T.scale(u1_hat, math.sqrt(pa.p1))),
                       1.0 / math.sqrt(1.0 - pa.p1))
    z2 = _user_decode(store, "pa.df2", "pa.dec2", residual, c2)
    return z1_tilde, z2


def pa_round_trip(store: ParamStore, s1: Tensor, s2: Tensor, pa: PaConfig,
                  snr1_db: float, snr2_db: float, rng1: np.random.Generator,
                  rng2: np.random.Generator) -> tuple[Tensor, Tensor, Tensor]:
    y = pa_transmit(store, s1, s2, pa, snr1_db, snr2_db)
    y1 = awgn(y, snr_db_to_noise_power(snr1_db), rng1)
    y2 = awgn(y, snr_db_to_noise_power(snr2_db), rng2)
    z1 = pa_worse_receive(store, y1, pa, snr1_db)
    z1_tilde, z2 = pa_sic_receive(store, y2, pa, snr1_db, snr2_db)
    return z1, z1_tilde, z2


def train_baseline(kind: str, control: TdConfig | PaConfig, dataset: Dataset,
                   cfg: SystemConfig, tc: TrainConfig) -> tuple[ParamStore, list[LogRow]]:
    """Train one TD or PA model under the same episode protocol as the
    fusion scheme (the sampled alpha is ignored by both baselines)."""
    if kind == "td":
        if not isinstance(control, TdConfig):
            raise ConfigError("kind 'td' requires a TdConfig")
        store = build_td(cfg, control, tc.seed)
    elif kind == "pa":
        if not isinstance(control, PaConfig):
            raise ConfigError("kind 'pa' requires a PaConfig")
        store = build_pa(cfg, tc.seed)
    else:
        raise ConfigError(f"unknown baseline kind {kind!r}")

    ctrl_val = control.time_share if kind == "td" else control.p1
    optimizer = T.Adam(store.tensors, lr=tc.lr_phase1)
    episode_rng = substream(tc.seed, 0xE915)
    rows: list[LogRow] = []
    step = 0
    for epoch in range(tc.epochs_phase1 + tc.epochs_phase2):
        optimizer.lr = tc.lr_phase1 if epoch < tc.epochs_phase1 else tc.lr_phase2
        batches = paired_batches(dataset, tc.batch_size, tc.seed, epoch, tc.reshuffle_each_epoch)
        for b, (s1, s2) in enumerate(batches):
            ep = sample_episode(tc, episode_rng)
            rng1 = substream(tc.seed, 0xC4A7, epoch, b, 1)
            rng2 = substream(tc.seed, 0xC4A7, epoch, b, 2)
            s1_t, s2_t = Tensor(s1), Tensor(s2)
            if kind == "td":
                z1, z2 = td_round_trip(store, s1_t, s2_t, control, ep.snr1_db, ep.snr2_db,
                                       rng1, rng2)
                l1 = T.mse(z1, s1_t)
                l2 = T.mse(z2, s2_t)
            else:
                z1, z1_tilde, z2 = pa_round_trip(store, s1_t, s2_t, control, ep.snr1_db,
                                                 ep.snr2_db, rng1, rng2)
                l1 = T.mse(z1, s1_t)
                l2 = T.add(T.mse(z2, s2_t), T.scale(T.mse(z1_tilde, s1_t), tc.beta))
            loss = T.add(l1, T.scale(l2, tc.lam))
            if not np.isfinite(loss.data):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {b}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            rows.append(LogRow(epoch, step, ctrl_val, ep.snr1_db, ep.snr2_db,
                               loss.data.item(), l1.data.item(), l2.data.item()))
            step += 1
    return store, rows
