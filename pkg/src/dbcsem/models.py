"""Neural components of the broadcast transceiver: semantic encoder/decoder,
mutual attention, SNR-adaptive fusion (with alpha-controlled dimension
allocation), de-fusion, and the end-to-end user pipelines.

All networks are fully-connected stacks over (batch, features) tensors.
SNR conditioning enters as a raw dB scalar scaled by 1/20 appended to the
feature vector; the fusion ratio alpha is appended unscaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dbcsem import tensor as T
from dbcsem.tensor import Tensor

SNR_SCALE = 1.0 / 20.0
DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    height: int = 8
    width: int = 8
    k: int = 48  # channel uses per image pair
    l: int = 96  # semantic feature dimension, fixed at 2k
    enc_hidden: list[int] = field(default_factory=lambda: [192])
    dec_hidden: list[int] = field(default_factory=lambda: [192])
    ma_hidden: list[int] = field(default_factory=lambda: [96])
    attn_hidden: list[int] = field(default_factory=lambda: [96])
    df_hidden: list[int] = field(default_factory=lambda: [192])
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    tie_reencoder: bool = False

    def __post_init__(self):
        if self.l != 2 * self.k:
            raise ConfigError(f"feature dim l={self.l} must equal 2k={2 * self.k}")
        for a in self.alpha_grid:
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha {a} outside [0, 1]")

    @property
    def source_dim(self) -> int:
        return self.height * self.width * 3

    @property
    def bandwidth_ratio(self) -> float:
        return self.k / self.source_dim

    def to_dict(self) -> dict:
        return {
            "height": self.height, "width": self.width, "k": self.k, "l": self.l,
            "enc_hidden": list(self.enc_hidden), "dec_hidden": list(self.dec_hidden),
            "ma_hidden": list(self.ma_hidden), "attn_hidden": list(self.attn_hidden),
            "df_hidden": list(self.df_hidden), "alpha_grid": list(self.alpha_grid),
            "tie_reencoder": self.tie_reencoder,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        d = dict(d)
        if "alpha_grid" in d:
            d["alpha_grid"] = tuple(d["alpha_grid"])
        return cls(**d)


def dimension_split(alpha: float, l: int) -> tuple[int, int]:
    """(floor(alpha*l), ceil((1-alpha)*l)), computed robustly to float grid noise."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"fusion ratio alpha={alpha} outside [0, 1]")

    def snap(x: float) -> float:
        r = round(x)
        return float(r) if abs(x - r) < 1e-9 else x

    d1 = math.floor(snap(alpha * l))
    d2 = math.ceil(snap((1.0 - alpha) * l))
    assert d1 + d2 == l, (d1, d2, l)
    return d1, d2


class ParamStore:
    """Named trainable tensors plus per-network layer layouts.

    Layer widths live in the config/layout so checkpoints stay
    self-describing: a store is rebuilt from config, then tensors
    are loaded into it by name.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        self.tensors: dict[str, Tensor] = {}
        self.layouts: dict[str, tuple[list[int], str | None, str]] = {}
        self.aliases: dict[str, str] = {}

    def add_mlp(self, prefix: str, dims: list[int], out_act: str | None,
                rng: np.random.Generator, hidden_act: str = "relu") -> None:
        if prefix in self.layouts or prefix in self.aliases:
            raise ConfigError(f"duplicate network prefix {prefix!r}")
        self.layouts[prefix] = (list(dims), out_act, hidden_act)
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.tensors[f"{prefix}.w{i}"] = Tensor(w, requires_grad=True)
            self.tensors[f"{prefix}.b{i}"] = Tensor(np.zeros((1, fan_out)), requires_grad=True)

    def alias(self, prefix: str, target: str) -> None:
        """Make `prefix` share parameters with `target` (weight tying)."""
        self.aliases[prefix] = target

    def forward(self, prefix: str, x: Tensor) -> Tensor:
        prefix = self.aliases.get(prefix, prefix)
        dims, out_act, hidden_act = self.layouts[prefix]
        n_layers = len(dims) - 1
        if x.shape[1] != dims[0]:
            raise T.ShapeError(f"{prefix}: input width {x.shape[1]}, expected {dims[0]}")
        h = x
        for i in range(n_layers):
            h = T.add(T.matmul(h, self.tensors[f"{prefix}.w{i}"]), self.tensors[f"{prefix}.b{i}"])
            if i < n_layers - 1:
                h = T.relu(h) if hidden_act == "relu" else T.tanh(h)
        if out_act == "sigmoid":
            h = T.sigmoid(h)
        elif out_act == "tanh":
            h = T.tanh(h)
        return h

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.tensors.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.tensors) - set(state)
        extra = set(state) - set(self.tensors)
        if missing or extra:
            raise ConfigError(f"checkpoint mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, arr in state.items():
            if arr.shape != self.tensors[name].data.shape:
                raise ConfigError(
                    f"checkpoint tensor {name!r} has shape {arr.shape}, "
                    f"expected {self.tensors[name].data.shape}"
                )
            self.tensors[name] = Tensor(arr, requires_grad=True)


def _param_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x1A17, tag])))


def build_proposed(cfg: SystemConfig, seed: int) -> ParamStore:
    """All transmitter and receiver networks of the fusion scheme."""
    store = ParamStore(cfg)
    rng = _param_rng(seed, 0)
    d, k, l = cfg.source_dim, cfg.k, cfg.l
    store.add_mlp("enc1", [d, *cfg.enc_hidden, l], None, rng)
    store.add_mlp("enc2", [d, *cfg.enc_hidden, l], None, rng)
    store.add_mlp("ma", [2 * l, *cfg.ma_hidden, l], "sigmoid", rng)
    store.add_mlp("fisf.c1", [l + 1, *cfg.attn_hidden, l], "sigmoid", rng)
    store.add_mlp("fisf.c2", [l + 1, *cfg.attn_hidden, l], "sigmoid", rng)
    store.add_mlp("fisf.fc1", [l + 1, l], None, rng)
    store.add_mlp("fisf.fc2", [l + 1, l], None, rng)
    store.add_mlp("fisf.q", [l, k], None, rng)
    store.add_mlp("df_worse", [k + 2, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("dec_worse", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    store.add_mlp("df_better1", [k + 2, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("dec_better1", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    if cfg.tie_reencoder:
        store.alias("reenc", "enc1")
    else:
        store.add_mlp("reenc", [d, *cfg.enc_hidden, l], None, rng)
    store.add_mlp("df_better2", [k + 2 + l, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("dec_better2", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    return store


def build_point_to_point(cfg: SystemConfig, seed: int) -> ParamStore:
    """Single-user transceiver mirroring the alpha=1 path of the fusion scheme."""
    store = ParamStore(cfg)
    rng = _param_rng(seed, 1)
    d, k, l = cfg.source_dim, cfg.k, cfg.l
    store.add_mlp("p2p.enc", [d, *cfg.enc_hidden, l], None, rng)
    store.add_mlp("p2p.attn", [l + 1, *cfg.attn_hidden, l], "sigmoid", rng)
    store.add_mlp("p2p.fc", [l + 1, l], None, rng)
    store.add_mlp("p2p.q", [l, k], None, rng)
    store.add_mlp("p2p.df", [k + 2, *cfg.df_hidden, l], None, rng, hidden_act="tanh")
    store.add_mlp("p2p.dec", [l, *cfg.dec_hidden, d], "sigmoid", rng, hidden_act="tanh")
    return store


def _cond_col(batch: int, value: float) -> Tensor:
    return Tensor(np.full((batch, 1), float(value)))


def _with_cond(x: Tensor, *values: float) -> Tensor:
    out = x
    for v in values:
        out = T.concat(out, _cond_col(x.shape[0], v), axis=1)
    return out


def semantic_encode(store: ParamStore, prefix: str, image: Tensor) -> Tensor:
    """Image pixels in [0,1] -> feature vector of length l."""
    return store.forward(prefix, image)


def semantic_decode(store: ParamStore, prefix: str, features: Tensor) -> Tensor:
    """Feature vector -> reconstruction with every pixel in [0,1]."""
    return store.forward(prefix, features)


def mutual_attention(store: ParamStore, x1e: Tensor, x2e: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Elementwise coupling weight w in (0,1)^l; returns (x1e*w, x2e*(1-w), w)."""
    if x1e.shape != x2e.shape:
        raise T.ShapeError(f"mutual_attention: feature shapes {x1e.shape} != {x2e.shape}")
    w = store.forward("ma", T.concat(x1e, x2e, axis=1))
    one_minus_w = T.sub(Tensor(np.ones_like(w.data)), w)
    return T.mul_elem(x1e, w), T.mul_elem(x2e, one_minus_w), w


def fisf_fuse(store: ParamStore, x1ma: Tensor, x2ma: Tensor, snr1_db: float,
              snr2_db: float, alpha: float, return_prenorm: bool = False):
    """SNR-adaptive masks, alpha-split dimension selection, tanh mixing MLP,
    and per-sample power normalization to the unit transmit constraint."""
    if snr1_db > snr2_db:
        raise ConfigError(f"fisf_fuse: snr1_db={snr1_db} must not exceed snr2_db={snr2_db}")
    l = store.config.l
    d1, d2 = dimension_split(alpha, l)
    c1 = store.forward("fisf.c1", _with_cond(x1ma, snr1_db * SNR_SCALE))
    c2 = store.forward("fisf.c2", _with_cond(x2ma, snr2_db * SNR_SCALE))
    x1ca = T.mul_elem(x1ma, c1)
    x2ca = T.mul_elem(x2ma, c2)
    f1 = store.forward("fisf.fc1", _with_cond(x1ca, alpha))
    f2 = store.forward("fisf.fc2", _with_cond(x2ca, 1.0 - alpha))
    x1rc = T.narrow(f1, 1, 0, d1)
    x2rc = T.narrow(f2, 1, 0, d2)
    y_pre = T.tanh(store.forward("fisf.q", T.concat(x1rc, x2rc, axis=1)))
    y = T.power_normalize(y_pre)
    if return_prenorm:
        return y, y_pre
    return y


def transmit(store: ParamStore, s1: Tensor, s2: Tensor, snr1_db: float,
             snr2_db: float, alpha: float) -> Tensor:
    """Full transmitter: encode both sources, couple, fuse, normalize.

    At alpha in {0, 1} the system degrades to a point-to-point link: the
    excluded source is dropped before mutual attention, so the transmitted
    vector is exactly invariant to it.
    """
    x1e = semantic_encode(store, "enc1", s1)
    x2e = semantic_encode(store, "enc2", s2)
    if alpha == 0.0:
        x1ma = Tensor(np.zeros_like(x1e.data))
        x2ma = x2e
    elif alpha == 1.0:
        x1ma = x1e
        x2ma = Tensor(np.zeros_like(x2e.data))
    else:
        x1ma, x2ma, _ = mutual_attention(store, x1e, x2e)
    return fisf_fuse(store, x1ma, x2ma, snr1_db, snr2_db, alpha)


def defuse(store: ParamStore, prefix: str, y_rx: Tensor, snr_db: float, alpha: float,
           extra: Tensor | None = None) -> Tensor:
    """Noisy channel symbols (+ conditioning) -> feature vector of length l."""
    x = _with_cond(y_rx, snr_db * SNR_SCALE, alpha)
    in_dim = store.layouts[store.aliases.get(prefix, prefix)][0][0]
    expects_extra = in_dim == store.config.k + 2 + store.config.l
    if extra is not None:
        if not expects_extra:
            raise ConfigError(f"{prefix} is not configured for a conditioning feature input")
        x = T.concat(x, extra, axis=1)
    elif expects_extra:
        raise ConfigError(f"{prefix} requires a conditioning feature input")
    return store.forward(prefix, x)


def worse_user_pipeline(store: ParamStore, y1: Tensor, snr1_db: float, alpha: float) -> Tensor:
    feat = defuse(store, "df_worse", y1, snr1_db, alpha)
    return semantic_decode(store, "dec_worse", feat)


def better_user_pipeline(store: ParamStore, y2: Tensor, snr2_db: float,
                         alpha: float) -> tuple[Tensor, Tensor]:
    """Reconstruct the worse user's image first, then condition on its
    re-encoded features to recover the better user's own image."""
    feat1 = defuse(store, "df_better1", y2, snr2_db, alpha)
    z1_tilde = semantic_decode(store, "dec_better1", feat1)
    x1_tilde = semantic_encode(store, "reenc", z1_tilde)
    feat2 = defuse(store, "df_better2", y2, snr2_db, alpha, extra=x1_tilde)
    z2 = semantic_decode(store, "dec_better2", feat2)
    return z1_tilde, z2


def point_to_point_transmit(store: ParamStore, s: Tensor, snr_db: float) -> Tensor:
    xe = store.forward("p2p.enc", s)
    c = store.forward("p2p.attn", _with_cond(xe, snr_db * SNR_SCALE))
    xca = T.mul_elem(xe, c)
    f = store.forward("p2p.fc", _with_cond(xca, 1.0))
    y = T.tanh(store.forward("p2p.q", f))
    return T.power_normalize(y)


def point_to_point_receive(store: ParamStore, y_rx: Tensor, snr_db: float) -> Tensor:
    feat = store.forward("p2p.df", _with_cond(y_rx, snr_db * SNR_SCALE, 1.0))
    return store.forward("p2p.dec", feat)
