# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused Adam update and activation backward passes.

All arrays are flat contiguous float64 views over the tensors they update.
The pure-Python twin of this module is dbcsem._pykernels; both expose the
same functions and are selected at import time by dbcsem.backend.
"""

from libc.math cimport sqrt, isfinite


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                long step, double lr, double beta1, double beta2, double eps):
    """In-place bias-corrected Adam step. Returns False if g contains NaN/Inf."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double bc1 = 1.0 - beta1 ** step
    cdef double bc2 = 1.0 - beta2 ** step
    cdef double gi, mhat, vhat
    for i in range(n):
        gi = g[i]
        if not isfinite(gi):
            return False
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] -= lr * mhat / (sqrt(vhat) + eps)
    return True


def tanh_grad_acc(double[::1] gout, double[::1] out, double[::1] gin):
    """gin += gout * (1 - out^2) where out = tanh(x)."""
    cdef Py_ssize_t i, n = gout.shape[0]
    for i in range(n):
        gin[i] += gout[i] * (1.0 - out[i] * out[i])


def sigmoid_grad_acc(double[::1] gout, double[::1] out, double[::1] gin):
    """gin += gout * out * (1 - out) where out = sigmoid(x)."""
    cdef Py_ssize_t i, n = gout.shape[0]
    for i in range(n):
        gin[i] += gout[i] * out[i] * (1.0 - out[i])


def relu_grad_acc(double[::1] gout, double[::1] out, double[::1] gin):
    """gin += gout * 1[out > 0] where out = relu(x)."""
    cdef Py_ssize_t i, n = gout.shape[0]
    for i in range(n):
        if out[i] > 0.0:
            gin[i] += gout[i]
