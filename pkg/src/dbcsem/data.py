"""Dataset ingestion: CIFAR-10 binary files, deterministic synthetic images,
and the paired two-source batch iterator used by the training loop."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixels
SYNTHETIC_KINDS = ("gradients", "gaussians", "checker", "spectral")


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    images: np.ndarray  # (count, h*n*3) float64 in [0, 1]
    height: int
    width: int
    provenance: str

    @property
    def count(self) -> int:
        return self.images.shape[0]

    @property
    def checksum(self) -> str:
        return hashlib.sha256(self.images.astype("<f8").tobytes()).hexdigest()


def load_cifar10(paths: Sequence[str | Path]) -> Dataset:
    """Parse standard CIFAR-10 binary batches (label byte + 3072 pixel bytes)."""
    blocks = []
    for path in paths:
        buf = Path(path).read_bytes()
        if len(buf) % RECORD_BYTES != 0:
            raise DatasetError(
                f"{path}: length {len(buf)} is not a multiple of {RECORD_BYTES} "
                f"(excess {len(buf) % RECORD_BYTES} bytes)"
            )
        records = np.frombuffer(buf, dtype=np.uint8).reshape(-1, RECORD_BYTES)
        blocks.append(records[:, 1:])  # drop label byte
    pixels = np.concatenate(blocks, axis=0).astype(np.float64) / 255.0
    return Dataset(images=pixels, height=32, width=32, provenance="cifar10")


def save_records(dataset: Dataset, path: str | Path) -> None:
    """Export in the CIFAR-style record layout (label byte 0, then pixels).

    Record size is 1 + h*n*3 bytes: 3073 for 32x32 images, smaller for
    desk-scale synthetic sets.
    """
    pixels = np.clip(np.rint(dataset.images * 255.0), 0, 255).astype(np.uint8)
    records = np.zeros((dataset.count, 1 + pixels.shape[1]), dtype=np.uint8)
    records[:, 1:] = pixels
    Path(path).write_bytes(records.tobytes())


def load_records(paths: Sequence[str | Path], h: int, n: int) -> Dataset:
    """Load CIFAR-style records of arbitrary image dims (1 label byte + pixels)."""
    rec_bytes = 1 + h * n * 3
    blocks = []
    for path in paths:
        buf = Path(path).read_bytes()
        if len(buf) % rec_bytes != 0:
            raise DatasetError(
                f"{path}: length {len(buf)} is not a multiple of {rec_bytes} "
                f"(excess {len(buf) % rec_bytes} bytes)"
            )
        records = np.frombuffer(buf, dtype=np.uint8).reshape(-1, rec_bytes)
        blocks.append(records[:, 1:])
    pixels = np.concatenate(blocks, axis=0).astype(np.float64) / 255.0
    provenance = "cifar10" if rec_bytes == RECORD_BYTES else "records"
    return Dataset(images=pixels, height=h, width=n, provenance=provenance)


def gen_synthetic(count: int, h: int, n: int, seed: int, kind: str = "gaussians") -> Dataset:
    """Deterministic structured images for desk-scale runs and CI."""
    if h < 4 or n < 4:
        raise DatasetError("image dims must be >= 4")
    if kind not in SYNTHETIC_KINDS:
        raise DatasetError(f"unknown synthetic kind {kind!r}, expected one of {SYNTHETIC_KINDS}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xDA7A])))
    if kind == "spectral":
        # Coefficients over a random orthonormal pixel basis with a power-law
        # variance profile: every extra retained latent dimension buys a
        # predictable slice of reconstruction quality, so compression trade-offs
        # show up smoothly even on tiny images.
        dim = h * n * 3
        basis = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
        coeff = rng.uniform(-1.0, 1.0, size=(count, dim))
        coeff *= np.arange(1, dim + 1, dtype=np.float64) ** -0.75
        pixels = np.clip(0.5 + (coeff @ basis.T) * 0.8, 0.0, 1.0)
        return Dataset(images=pixels, height=h, width=n, provenance="synthetic")
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, n), indexing="ij")
    images = np.empty((count, h, n, 3), dtype=np.float64)
    for i in range(count):
        for c in range(3):
            if kind == "gradients":
                a, b = rng.uniform(-1, 1, size=2)
                img = 0.5 + 0.5 * (a * (xx - 0.5) + b * (yy - 0.5))
            elif kind == "gaussians":
                img = np.full((h, n), rng.uniform(0.1, 0.4))
                for _ in range(3):
                    cy, cx = rng.uniform(0, 1, size=2)
                    s = rng.uniform(0.08, 0.3)
                    amp = rng.uniform(0.3, 0.6)
                    img = img + amp * np.exp(-(((yy - cy) ** 2) + (xx - cx) ** 2) / (2 * s * s))
            else:  # checker
                period = int(rng.integers(2, max(3, h // 2)))
                phase = int(rng.integers(0, period))
                img = (((yy * h + phase) // period + (xx * n) // period) % 2) * rng.uniform(0.5, 1.0)
            images[i, :, :, c] = img
    images = np.clip(images, 0.0, 1.0)
    return Dataset(images=images.reshape(count, h * n * 3), height=h, width=n, provenance="synthetic")


def np_permutation(count: int, seed: int) -> np.ndarray:
    """Deterministic permutation used to pair a test set with its shuffled copy."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5AFE, 0])))
    return rng.permutation(count)


def paired_batches(dataset: Dataset, batch_size: int, seed: int, epoch: int = 0,
                   reshuffle_each_epoch: bool = True) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (s1, s2) batches: s1 walks the set in order, s2 walks a shuffled copy.

    Trailing partial batches are dropped. With reshuffle_each_epoch=False the
    copy is shuffled once (epoch index ignored), mirroring the literal
    copy-then-shuffle protocol.
    """
    if batch_size > dataset.count:
        raise DatasetError(f"batch size {batch_size} exceeds dataset size {dataset.count}")
    shuffle_key = epoch if reshuffle_each_epoch else 0
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5AFE, shuffle_key])))
    perm = rng.permutation(dataset.count)
    n_batches = dataset.count // batch_size
    for b in range(n_batches):
        idx = slice(b * batch_size, (b + 1) * batch_size)
        yield dataset.images[idx], dataset.images[perm[idx]]
