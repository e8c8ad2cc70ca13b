"""Degraded Gaussian broadcast channel: one input, two ordered-noise outputs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dbcsem.tensor import ShapeError, Tensor, add


class ConfigError(ValueError):
    pass


def snr_db_to_noise_power(snr_db: float) -> float:
    """Noise power for the given SNR assuming unit transmit power."""
    return 10.0 ** (-snr_db / 10.0)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream for a (seed, *key) tuple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


@dataclass
class ChannelConfig:
    """Two-user AWGN broadcast setup; user 1 is the worse (noisier) user."""

    snr1_db: float
    snr2_db: float
    seed: int = 0
    sigma1_sq: float = field(init=False)
    sigma2_sq: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.snr1_db) and math.isfinite(self.snr2_db)):
            raise ConfigError("SNRs must be finite")
        if not self.snr1_db < self.snr2_db:
            raise ConfigError(
                f"degradedness requires snr1_db < snr2_db, got {self.snr1_db} >= {self.snr2_db}"
            )
        self.sigma1_sq = snr_db_to_noise_power(self.snr1_db)
        self.sigma2_sq = snr_db_to_noise_power(self.snr2_db)


def awgn(y: Tensor, sigma_sq: float, rng: np.random.Generator) -> Tensor:
    """y + n with i.i.d. zero-mean Gaussian noise of power sigma_sq.

    Noise enters the tape as an additive constant, so gradients pass
    through unchanged (reparameterization).
    """
    if sigma_sq == 0.0:
        return y
    noise = Tensor(rng.normal(0.0, math.sqrt(sigma_sq), size=y.data.shape))
    return add(y, noise)


def awgn_transmit(y: Tensor, config: ChannelConfig, rng1: np.random.Generator,
                  rng2: np.random.Generator) -> tuple[Tensor, Tensor]:
    """Broadcast y to both users with independent noise streams."""
    y1 = awgn(y, config.sigma1_sq, rng1)
    y2 = awgn(y, config.sigma2_sq, rng2)
    return y1, y2


def empirical_snr(clean: np.ndarray, noisy: np.ndarray) -> float:
    """10*log10(signal power / noise power); +inf when noisy == clean."""
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if clean.shape != noisy.shape:
        raise ShapeError(f"empirical_snr: shapes {clean.shape} and {noisy.shape} differ")
    noise_power = float(np.mean((noisy - clean) ** 2))
    if noise_power == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.mean(clean**2)) / noise_power)
