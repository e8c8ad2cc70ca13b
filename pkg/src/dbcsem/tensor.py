"""Dense float64 tensors with reverse-mode autodiff and an Adam optimizer.

The tape is dynamic: every op records its node when gradients are enabled,
and the graph is rebuilt on each forward pass. Tensors are immutable after
construction (the optimizer mutates parameter buffers between tapes, never
inside one). Only 0-d scalars and 2-d (batch, features) arrays are used by
the rest of the package; elementwise ops broadcast over the leading batch
axis only (a (1, n) operand against (batch, n)).
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable

import numpy as np

from dbcsem.backend import adam_update, relu_grad_acc, sigmoid_grad_acc, tanh_grad_acc


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested op."""


class NumericalError(RuntimeError):
    """NaN/Inf encountered where the contract requires finite values."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (evaluation fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _asarray(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    return np.ascontiguousarray(a)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Reverse pass from a scalar node; each node visited exactly once."""
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar loss, got shape {self.data.shape}")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()

    # -- convenience operators (used mostly in tests) --
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul_elem(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def _node(data: np.ndarray, parents: Iterable[Tensor], backward: Callable[[], None]) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    # broadcast only over the leading batch axis: (1, n) against (batch, n)
    return grad.sum(axis=0, keepdims=True)


def _check_elementwise(a: Tensor, b: Tensor, op: str) -> None:
    sa, sb = a.data.shape, b.data.shape
    if sa == sb:
        return
    if len(sa) == 2 and len(sb) == 2 and sa[1] == sb[1] and (sa[0] == 1 or sb[0] == 1):
        return
    raise ShapeError(f"{op}: shapes {sa} and {sb} do not conform")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "add")
    out_data = a.data + b.data

    def backward():
        if a._backward is not None or a.requires_grad:
            a._ensure_grad()
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b._backward is not None or b.requires_grad:
            b._ensure_grad()
            b.grad += _unbroadcast(out.grad, b.data.shape)

    out = _node(out_data, (a, b), backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "sub")
    out_data = a.data - b.data

    def backward():
        if a._backward is not None or a.requires_grad:
            a._ensure_grad()
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b._backward is not None or b.requires_grad:
            b._ensure_grad()
            b.grad -= _unbroadcast(out.grad, b.data.shape)

    out = _node(out_data, (a, b), backward)
    return out


def mul_elem(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "mul_elem")
    out_data = a.data * b.data

    def backward():
        if a._backward is not None or a.requires_grad:
            a._ensure_grad()
            a.grad += _unbroadcast(out.grad * b.data, a.data.shape)
        if b._backward is not None or b.requires_grad:
            b._ensure_grad()
            b.grad += _unbroadcast(out.grad * a.data, b.data.shape)

    out = _node(out_data, (a, b), backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: shapes {a.data.shape} and {b.data.shape} do not conform")
    out_data = a.data @ b.data

    def backward():
        if a._backward is not None or a.requires_grad:
            a._ensure_grad()
            a.grad += out.grad @ b.data.T
        if b._backward is not None or b.requires_grad:
            b._ensure_grad()
            b.grad += a.data.T @ out.grad

    out = _node(out_data, (a, b), backward)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out_data = a.data * c

    def backward():
        a._ensure_grad()
        a.grad += out.grad * c

    out = _node(out_data, (a,), backward)
    return out


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward():
        a._ensure_grad()
        tanh_grad_acc(out.grad.ravel(), out.data.ravel(), a.grad.ravel())

    out = _node(out_data, (a,), backward)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def backward():
        a._ensure_grad()
        sigmoid_grad_acc(out.grad.ravel(), out.data.ravel(), a.grad.ravel())

    out = _node(out_data, (a,), backward)
    return out


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward():
        a._ensure_grad()
        relu_grad_acc(out.grad.ravel(), out.data.ravel(), a.grad.ravel())

    out = _node(out_data, (a,), backward)
    return out


def concat(a: Tensor, b: Tensor, axis: int = 1) -> Tensor:
    if a.data.ndim != b.data.ndim:
        raise ShapeError(f"concat: ranks {a.data.ndim} and {b.data.ndim} differ")
    for ax in range(a.data.ndim):
        if ax != axis and a.data.shape[ax] != b.data.shape[ax]:
            raise ShapeError(f"concat: shapes {a.data.shape} and {b.data.shape} disagree off-axis")
    na = a.data.shape[axis]
    out_data = np.concatenate([a.data, b.data], axis=axis)

    def backward():
        ga, gb = np.split(out.grad, [na], axis=axis)
        if a._backward is not None or a.requires_grad:
            a._ensure_grad()
            a.grad += ga
        if b._backward is not None or b.requires_grad:
            b._ensure_grad()
            b.grad += gb

    out = _node(out_data, (a, b), backward)
    return out


def narrow(a: Tensor, axis: int, start: int, count: int) -> Tensor:
    """Contiguous slice of `count` extents along `axis` (identity-selection matrix)."""
    if start < 0 or count < 0 or start + count > a.data.shape[axis]:
        raise ShapeError(
            f"narrow: [{start}, {start + count}) out of range for axis {axis} of {a.data.shape}"
        )
    idx = tuple(slice(start, start + count) if ax == axis else slice(None) for ax in range(a.data.ndim))
    out_data = np.ascontiguousarray(a.data[idx])

    def backward():
        a._ensure_grad()
        a.grad[idx] += out.grad

    out = _node(out_data, (a,), backward)
    return out


def slice_rows(a: Tensor, start: int, count: int) -> Tensor:
    """First-axis narrow; per-sample feature selection uses narrow(axis=1)."""
    return narrow(a, 0, start, count)


def sum_sq(a: Tensor) -> Tensor:
    out_data = np.asarray(np.sum(a.data * a.data))

    def backward():
        a._ensure_grad()
        a.grad += 2.0 * a.data * out.grad

    out = _node(out_data, (a,), backward)
    return out


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    out_data = np.asarray(a.data.mean())

    def backward():
        a._ensure_grad()
        a.grad += out.grad / n

    out = _node(out_data, (a,), backward)
    return out


def power_normalize(a: Tensor) -> Tensor:
    """Rescale each row to mean-square power exactly 1."""
    if a.data.ndim != 2:
        raise ShapeError(f"power_normalize expects (batch, k), got {a.data.shape}")
    k = a.data.shape[1]
    r = np.sqrt(np.mean(a.data * a.data, axis=1, keepdims=True))
    if np.any(r == 0.0):
        raise NumericalError("power_normalize: zero-power sample")
    out_data = a.data / r

    def backward():
        a._ensure_grad()
        inner = np.sum(out.grad * a.data, axis=1, keepdims=True)
        a.grad += out.grad / r - a.data * inner / (k * r**3)

    out = _node(out_data, (a,), backward)
    return out


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared error over every element (batch and features)."""
    d = sub(a, b)
    return mean(mul_elem(d, d))


class Adam:
    """Standard Adam over a name->Tensor parameter dict; deterministic order."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self._v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        for name in self.params:
            t = self.params[name]
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            ok = adam_update(
                t.data.ravel(), np.ascontiguousarray(g).ravel(),
                self._m[name].ravel(), self._v[name].ravel(),
                self.step_count, self.lr, self.beta1, self.beta2, self.eps,
            )
            if not ok:
                raise NumericalError(f"NaN/Inf gradient for parameter '{name}'")


def grad_check(f: Callable[[], Tensor], params: list[Tensor],
               step: float = 1e-5, tol: float = 1e-4) -> dict:
    """Compare reverse-mode gradients of f() against central finite differences.

    f must rebuild its tape on every call from the current parameter buffers.
    Returns {"max_rel_err", "passed", "per_param"}.
    """
    for p in params:
        p.zero_grad()
    loss = f()
    loss.backward()
    analytic = [np.array(p.grad) if p.grad is not None else np.zeros_like(p.data) for p in params]

    per_param = []
    max_err = 0.0
    with no_grad():
        for p, g in zip(params, analytic):
            flat = p.data.ravel()
            worst = 0.0
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                fp = f().data.item()
                flat[i] = orig - step
                fm = f().data.item()
                flat[i] = orig
                fd = (fp - fm) / (2.0 * step)
                ad = g.ravel()[i]
                err = abs(ad - fd) / max(abs(ad), abs(fd), 1.0)
                worst = max(worst, err)
            per_param.append(worst)
            max_err = max(max_err, worst)
    return {"max_rel_err": max_err, "passed": max_err <= tol, "per_param": per_param}
