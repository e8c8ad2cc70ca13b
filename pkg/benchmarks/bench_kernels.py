"""Compare the compiled kernel backend against the pure-numpy fallback.

Runs each micro-kernel in-process (both modules import side by side) and
times a short end-to-end training run in subprocesses, once per backend,
selected via DBCSEM_KERNELS.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from dbcsem import _pykernels, backend

TRAIN_SNIPPET = """
from dbcsem import backend, data, models, training
ds = data.gen_synthetic(64, 8, 8, 0, kind="gradients")
cfg = models.SystemConfig()
tc = training.TrainConfig(epochs_phase1=3, epochs_phase2=0, lr_phase1=1e-3,
                          batch_size=32, seed=0)
import time
t = time.perf_counter()
training.train(ds, cfg, tc)
print(f"{backend.BACKEND} {time.perf_counter() - t:.3f}")
"""


def bench_micro(repeats: int) -> None:
    n = 200_000
    rng = np.random.default_rng(0)
    g = rng.normal(size=n)
    out_tanh = np.tanh(rng.normal(size=n))
    kernels = {"compiled": backend, "numpy": _pykernels}
    print(f"micro-kernels over {n} elements, best of {repeats}")
    for label, mod in kernels.items():
        p, m, v = rng.normal(size=n), np.zeros(n), np.zeros(n)
        best = min(_time(lambda: mod.adam_update(p, g, m, v, 3, 1e-3, 0.9, 0.999, 1e-8))
                   for _ in range(repeats))
        print(f"  adam_update     {label:>8}: {best * 1e3:8.3f} ms")
    for label, mod in kernels.items():
        gin = np.zeros(n)
        best = min(_time(lambda: mod.tanh_grad_acc(g, out_tanh, gin))
                   for _ in range(repeats))
        print(f"  tanh_grad_acc   {label:>8}: {best * 1e3:8.3f} ms")


def _time(fn) -> float:
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t


def bench_training() -> None:
    print("end-to-end training (3 epochs, default architecture):")
    for kern in (None, "python"):
        env = dict(os.environ)
        env.pop("DBCSEM_KERNELS", None)
        if kern:
            env["DBCSEM_KERNELS"] = kern
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env,
                             capture_output=True, text=True, check=True)
        name, seconds = out.stdout.split()
        print(f"  {name:>8}: {float(seconds):7.3f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {backend.BACKEND}")
    bench_micro(args.repeats)
    bench_training()


if __name__ == "__main__":
    main()
