"""Gradient-check suite: every primitive op plus the full fused pipeline
(encode -> attention -> fusion -> channel -> both users -> loss) against
central finite differences."""

from __future__ import annotations

import numpy as np

from dbcsem import models, tensor as T, training
from dbcsem.channel import substream
from dbcsem.models import SystemConfig
from dbcsem.tensor import Tensor, grad_check


def _rand(rng, *shape):
    # keep magnitudes away from 0 so relu/abs kinks stay off the FD path
    signs = rng.choice([-1.0, 1.0], size=shape)
    return Tensor(signs * rng.uniform(0.2, 1.0, size=shape), requires_grad=True)


def op_checks(dims: int, seed: int, step: float = 1e-5, tol: float = 1e-4) -> list[dict]:
    """One finite-difference check per forward op; dims caps every extent."""
    rng = np.random.default_rng(seed)
    b, n = max(2, dims // 4), dims
    a = _rand(rng, b, n)
    c = _rand(rng, b, n)
    w = _rand(rng, n, max(2, n // 2))
    bias = _rand(rng, 1, max(2, n // 2))
    checks = [
        ("matmul", lambda: T.mean(T.matmul(a, w)), [a, w]),
        ("add", lambda: T.mean(T.mul_elem(T.add(a, c), a)), [a, c]),
        ("sub", lambda: T.mean(T.mul_elem(T.sub(a, c), a)), [a, c]),
        ("mul_elem", lambda: T.mean(T.mul_elem(a, c)), [a, c]),
        ("bias_broadcast", lambda: T.mean(T.sigmoid(T.add(T.matmul(a, w), bias))), [w, bias]),
        ("tanh", lambda: T.mean(T.tanh(a)), [a]),
        ("sigmoid", lambda: T.mean(T.sigmoid(a)), [a]),
        ("relu", lambda: T.mean(T.relu(a)), [a]),
        ("scale", lambda: T.mean(T.scale(a, -2.5)), [a]),
        ("concat", lambda: T.sum_sq(T.concat(a, c, axis=1)), [a, c]),
        ("narrow", lambda: T.sum_sq(T.narrow(a, 1, 1, n - 1)), [a]),
        ("sum_sq", lambda: T.sum_sq(a), [a]),
        ("mean", lambda: T.mean(T.mul_elem(a, a)), [a]),
        ("power_normalize", lambda: T.mean(T.mul_elem(T.power_normalize(a), c)), [a, c]),
        ("mse", lambda: T.mse(T.tanh(a), c), [a]),
    ]
    results = []
    for name, f, params in checks:
        report = grad_check(f, params, step=step, tol=tol)
        results.append({"name": name, "max_rel_err": report["max_rel_err"],
                        "passed": report["passed"]})
    return results


def pipeline_check(seed: int, step: float = 1e-5, tol: float = 1e-4) -> dict:
    """Finite-difference check of the full fused system at toy dimensions,
    with frozen channel noise so the loss is a deterministic function of
    the parameters."""
    cfg = SystemConfig(height=2, width=2, k=3, l=6, enc_hidden=[8], dec_hidden=[8],
                       ma_hidden=[6], attn_hidden=[6], df_hidden=[8])
    store = models.build_proposed(cfg, seed)
    tc = training.TrainConfig(batch_size=2, seed=seed)
    rng = np.random.default_rng(seed + 1)
    s1 = Tensor(rng.uniform(0.1, 0.9, size=(2, cfg.source_dim)))
    s2 = Tensor(rng.uniform(0.1, 0.9, size=(2, cfg.source_dim)))
    snr1, snr2, alpha = 0.0, 5.0, 0.5
    n1 = Tensor(substream(seed, 0xD1A6, 1).normal(0, 0.3, size=(2, cfg.k)))
    n2 = Tensor(substream(seed, 0xD1A6, 2).normal(0, 0.1, size=(2, cfg.k)))

    def f():
        y = models.transmit(store, s1, s2, snr1, snr2, alpha)
        y1 = T.add(y, n1)
        y2 = T.add(y, n2)
        z1 = models.worse_user_pipeline(store, y1, snr1, alpha)
        z1_tilde, z2 = models.better_user_pipeline(store, y2, snr2, alpha)
        l1 = training.loss_worse(z1, s1)
        l2 = training.loss_better(z2, s2, z1_tilde, s1, tc.beta)
        return training.total_loss(l1, l2, tc.lam, alpha)

    params = [store.tensors[k] for k in sorted(store.tensors)]
    report = grad_check(f, params, step=step, tol=tol)
    return {"name": "fused_pipeline", "max_rel_err": report["max_rel_err"],
            "passed": report["passed"]}


def run_suite(dims: int = 8, seed: int = 0, tol: float = 1e-4,
              corrupt: str | None = None) -> list[dict]:
    """All checks; `corrupt` perturbs one activation backward as a self-test
    that the harness actually detects wrong gradients."""
    if corrupt is not None:
        originals = {"tanh": T.tanh_grad_acc, "sigmoid": T.sigmoid_grad_acc,
                     "relu": T.relu_grad_acc}
        if corrupt not in originals:
            raise ValueError(f"unknown corruptible op {corrupt!r}; choose from {sorted(originals)}")

        def corrupted(gout, out, gin):
            originals[corrupt](gout * 1.01, out, gin)

        setattr(T, f"{corrupt}_grad_acc", corrupted)
    try:
        results = op_checks(dims, seed, tol=tol)
        results.append(pipeline_check(seed, tol=tol))
    finally:
        if corrupt is not None:
            setattr(T, f"{corrupt}_grad_acc", originals[corrupt])
    return results
