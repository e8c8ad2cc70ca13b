"""Pure-numpy twin of the compiled kernels in dbcsem._core.

Same signatures, same semantics; used when the extension is unavailable or
when DBCSEM_KERNELS=python forces the fallback.
"""

import numpy as np


def adam_update(p, g, m, v, step, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam step. Returns False if g contains NaN/Inf."""
    if not np.all(np.isfinite(g)):
        return False
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return True


def tanh_grad_acc(gout, out, gin):
    gin += gout * (1.0 - out * out)


def sigmoid_grad_acc(gout, out, gin):
    gin += gout * out * (1.0 - out)


def relu_grad_acc(gout, out, gin):
    gin += gout * (out > 0.0)
