"""PSNR metric, alpha sweeps producing the two-user performance region,
and dominance comparison between region point sets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dbcsem import models
from dbcsem.channel import awgn, snr_db_to_noise_power, substream
from dbcsem.models import ParamStore
from dbcsem.tensor import ShapeError, Tensor, no_grad

REGION_HEADER = ["scheme", "param", "snr1_db", "snr2_db", "psnr1_db", "psnr2_db", "psnr_aux_db"]


@dataclass
class MetricRecord:
    scheme: str
    param: float  # control parameter: alpha, time share, or power split
    snr1_db: float
    snr2_db: float
    psnr1_db: float  # worse user on s1
    psnr2_db: float  # better user on s2
    psnr_aux_db: float | None = None  # better user's intermediate s1 reconstruction

    def as_csv(self) -> list[str]:
        def fmt(x):
            if x is None:
                return ""
            return "inf" if math.isinf(x) else f"{x:.10g}"

        return [self.scheme, f"{self.param:.10g}", f"{self.snr1_db:.10g}",
                f"{self.snr2_db:.10g}", fmt(self.psnr1_db), fmt(self.psnr2_db),
                fmt(self.psnr_aux_db)]


def psnr(reference: np.ndarray, reconstruction: np.ndarray) -> float:
    """Mean per-image PSNR in dB, peak value 1 for unit-normalized pixels.

    Images with zero error contribute the +inf sentinel and are excluded
    from the average; the result is +inf only if every image is exact.
    """
    value, _ = psnr_detail(reference, reconstruction)
    return value


def psnr_detail(reference: np.ndarray, reconstruction: np.ndarray) -> tuple[float, int]:
    """(mean finite per-image PSNR, count of exact images excluded)."""
    ref = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    rec = np.atleast_2d(np.asarray(reconstruction, dtype=np.float64))
    if ref.shape != rec.shape:
        raise ShapeError(f"psnr: shapes {ref.shape} != {rec.shape}")
    per_image_mse = np.mean((ref - rec) ** 2, axis=1)
    exact = per_image_mse == 0.0
    n_exact = int(exact.sum())
    if n_exact == len(per_image_mse):
        return math.inf, n_exact
    vals = 10.0 * np.log10(1.0 / per_image_mse[~exact])
    return float(vals.mean()), n_exact


def _eval_pair_key(alpha_index: int, snr1_db: float, snr2_db: float) -> list[int]:
    return [0xE7A1, alpha_index, int(round(snr1_db * 100)) % 2**31,
            int(round(snr2_db * 100)) % 2**31]


def evaluate_fusion(store: ParamStore, s1: np.ndarray, s2: np.ndarray, alpha: float,
                    snr1_db: float, snr2_db: float, seed: int,
                    cell_key: int = 0) -> MetricRecord:
    """One region point: full test set through the trained fusion transceiver,
    noise drawn from a stream fixed by the (alpha, SNR) cell for paired
    comparisons across schemes."""
    key = _eval_pair_key(cell_key, snr1_db, snr2_db)
    with no_grad():
        s1_t, s2_t = Tensor(s1), Tensor(s2)
        y = models.transmit(store, s1_t, s2_t, snr1_db, snr2_db, alpha)
        y1 = awgn(y, snr_db_to_noise_power(snr1_db), substream(seed, *key, 1))
        y2 = awgn(y, snr_db_to_noise_power(snr2_db), substream(seed, *key, 2))
        z1 = models.worse_user_pipeline(store, y1, snr1_db, alpha)
        z1_tilde, z2 = models.better_user_pipeline(store, y2, snr2_db, alpha)
    return MetricRecord(
        scheme="proposed", param=alpha, snr1_db=snr1_db, snr2_db=snr2_db,
        psnr1_db=psnr(s1, z1.data), psnr2_db=psnr(s2, z2.data),
        psnr_aux_db=psnr(s1, z1_tilde.data),
    )


def sweep_alpha(store: ParamStore, s1: np.ndarray, s2: np.ndarray,
                snr1_db: float, snr2_db: float, alpha_grid, seed: int) -> list[MetricRecord]:
    """One MetricRecord per fusion ratio at a fixed SNR pair."""
    return [
        evaluate_fusion(store, s1, s2, alpha, snr1_db, snr2_db, seed, cell_key=i)
        for i, alpha in enumerate(alpha_grid)
    ]


def evaluate_point_to_point(store: ParamStore, s: np.ndarray, snr_db: float,
                            seed: int, cell_key: int = 0) -> MetricRecord:
    """Single-user reference round trip at one SNR."""
    key = _eval_pair_key(cell_key, snr_db, snr_db)
    with no_grad():
        s_t = Tensor(s)
        y = models.point_to_point_transmit(store, s_t, snr_db)
        y_rx = awgn(y, snr_db_to_noise_power(snr_db), substream(seed, *key, 1))
        z = models.point_to_point_receive(store, y_rx, snr_db)
    value = psnr(s, z.data)
    return MetricRecord(
        scheme="p2p", param=1.0, snr1_db=snr_db, snr2_db=snr_db,
        psnr1_db=value, psnr2_db=value,
    )


def evaluate_td(store: ParamStore, s1: np.ndarray, s2: np.ndarray, td_config,
                snr1_db: float, snr2_db: float, seed: int, cell_key: int = 0) -> MetricRecord:
    from dbcsem import baselines

    key = _eval_pair_key(cell_key, snr1_db, snr2_db)
    with no_grad():
        z1, z2 = baselines.td_round_trip(
            store, Tensor(s1), Tensor(s2), td_config, snr1_db, snr2_db,
            substream(seed, *key, 1), substream(seed, *key, 2))
    return MetricRecord(
        scheme="td" if td_config.channel_adaptive else "td-noca",
        param=td_config.time_share, snr1_db=snr1_db, snr2_db=snr2_db,
        psnr1_db=psnr(s1, z1.data), psnr2_db=psnr(s2, z2.data),
    )


def evaluate_pa(store: ParamStore, s1: np.ndarray, s2: np.ndarray, pa_config,
                snr1_db: float, snr2_db: float, seed: int, cell_key: int = 0) -> MetricRecord:
    from dbcsem import baselines

    key = _eval_pair_key(cell_key, snr1_db, snr2_db)
    with no_grad():
        z1, z1_tilde, z2 = baselines.pa_round_trip(
            store, Tensor(s1), Tensor(s2), pa_config, snr1_db, snr2_db,
            substream(seed, *key, 1), substream(seed, *key, 2))
    return MetricRecord(
        scheme="pa" if pa_config.channel_adaptive else "pa-noca",
        param=pa_config.p1, snr1_db=snr1_db, snr2_db=snr2_db,
        psnr1_db=psnr(s1, z1.data), psnr2_db=psnr(s2, z2.data),
        psnr_aux_db=psnr(s1, z1_tilde.data),
    )


def pareto_frontier(records: list[MetricRecord]) -> list[MetricRecord]:
    """Subset of records not weakly dominated by any other record (maximize both PSNRs)."""
    out = []
    for r in records:
        dominated = any(
            (o.psnr1_db >= r.psnr1_db and o.psnr2_db >= r.psnr2_db)
            and (o.psnr1_db > r.psnr1_db or o.psnr2_db > r.psnr2_db)
            for o in records
        )
        if not dominated:
            out.append(r)
    return out


def region_dominance(records_a: list[MetricRecord], records_b: list[MetricRecord]) -> dict:
    """For each point of B, does some point of A weakly dominate it?"""
    if not records_a or not records_b:
        raise ValueError("region_dominance requires nonempty record sets")
    dominated_flags = [
        any(a.psnr1_db >= b.psnr1_db and a.psnr2_db >= b.psnr2_db for a in records_a)
        for b in records_b
    ]
    return {
        "fraction_dominated": sum(dominated_flags) / len(dominated_flags),
        "dominated_flags": dominated_flags,
        "frontier_a": pareto_frontier(records_a),
        "frontier_b": pareto_frontier(records_b),
    }


def write_region_csv(records: list[MetricRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REGION_HEADER)
        for rec in records:
            writer.writerow(rec.as_csv())
