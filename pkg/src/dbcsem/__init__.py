"""Fusion-based two-user semantic image transmission over a degraded
Gaussian broadcast channel: transceiver models, training, classical
baselines, and PSNR performance-region evaluation."""

from dbcsem.backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
