"""Kernel backend selection: compiled extension if built, numpy fallback otherwise.

Set DBCSEM_KERNELS=python to force the fallback (used by the benchmark to
compare both paths in one process-tree).
"""

import os

if os.environ.get("DBCSEM_KERNELS", "").lower() == "python":
    from dbcsem import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from dbcsem import _core as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from dbcsem import _pykernels as kernels  # type: ignore[no-redef]

        BACKEND = "python"

adam_update = kernels.adam_update
tanh_grad_acc = kernels.tanh_grad_acc
sigmoid_grad_acc = kernels.sigmoid_grad_acc
relu_grad_acc = kernels.relu_grad_acc
