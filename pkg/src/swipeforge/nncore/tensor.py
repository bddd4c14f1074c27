"""Reverse-mode automatic differentiation over float64 numpy arrays.

Small by design: only the operations the decoding, transliteration, and
correction models need. Graphs are built eagerly per call; ``backward`` walks
an iterative topological order. Ops that can produce NaN/Inf validate their
outputs and raise instead of letting bad values propagate.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class NonFiniteError(ArithmeticError):
    """A differentiable op produced NaN or Inf."""


_GRAD_ENABLED = [True]


@contextmanager
def no_grad():
    """Disable graph construction (inference fast path)."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward", "_needs")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._needs = requires_grad

    # -- construction ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def requires_grad(self) -> bool:
        return self._needs

    def item(self) -> float:
        return float(self.data.item())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, needs_grad={self._needs})"

    # -- autodiff machinery --------------------------------------------------

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p._needs and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self) -> None:
        self.grad = None

    # -- operations ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __getitem__(self, idx):
        return take(self, idx)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def reshape(self, *shape) -> "Tensor":
        return reshape(self, shape if len(shape) != 1 else shape[0])

    def sum(self, axis=None, keepdims=False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)

    def max(self) -> "Tensor":
        return tmax(self)

    def min(self) -> "Tensor":
        return tmin(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED[-1] and any(p._needs for p in parents):
        out._needs = True
        out._parents = parents
        out._backward = backward
    return out


def _acc(t: Tensor, g: np.ndarray) -> None:
    if t._needs:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _finite(data: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(data).all():
        raise NonFiniteError(f"{op} produced a non-finite value")
    return data


class _quiet(np.errstate):
    """Ops validate their outputs themselves; keep numpy warnings silent."""

    def __init__(self):
        super().__init__(divide="ignore", invalid="ignore", over="ignore")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        _acc(a, _unbroadcast(g * b.data, a.data.shape))
        _acc(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with _quiet():
        data = _finite(a.data / b.data, "div")

    def backward(g):
        _acc(a, _unbroadcast(g / b.data, a.data.shape))
        _acc(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return _node(data, (a, b), backward)


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    with _quiet():
        data = _finite(a.data ** exponent, "power")

    def backward(g):
        _acc(a, g * exponent * a.data ** (exponent - 1))

    return _node(data, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    with _quiet():
        data = _finite(np.exp(a.data), "exp")

    def backward(g):
        _acc(a, g * data)

    return _node(data, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    with _quiet():
        data = _finite(np.log(a.data), "log")

    def backward(g):
        _acc(a, g / a.data)

    return _node(data, (a,), backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    with _quiet():
        data = _finite(np.sqrt(a.data), "sqrt")

    def backward(g):
        _acc(a, g / (2.0 * data))

    return _node(data, (a,), backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    data = np.tanh(a.data)

    def backward(g):
        _acc(a, g * (1.0 - data * data))

    return _node(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    data = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))

    def backward(g):
        _acc(a, g * data * (1.0 - data))

    return _node(data, (a,), backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def backward(g):
        _acc(a, g * (a.data > 0.0))

    return _node(data, (a,), backward)


def logaddexp(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = _finite(np.logaddexp(a.data, b.data), "logaddexp")

    def backward(g):
        _acc(a, _unbroadcast(g * np.exp(a.data - data), a.data.shape))
        _acc(b, _unbroadcast(g * np.exp(b.data - data), b.data.shape))

    return _node(data, (a, b), backward)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        _acc(a, (g - dot) * data)

    return _node(data, (a,), backward)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = _finite(shifted - lse, "log_softmax")

    def backward(g):
        _acc(a, g - np.exp(data) * g.sum(axis=axis, keepdims=True))

    return _node(data, (a,), backward)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _acc(a, np.broadcast_to(g, a.data.shape).copy())

    return _node(np.asarray(data), (a,), backward)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def tmax(a) -> Tensor:
    a = as_tensor(a)
    idx = np.unravel_index(np.argmax(a.data), a.data.shape)
    data = np.asarray(a.data[idx])

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        _acc(a, full)

    return _node(data, (a,), backward)


def tmin(a) -> Tensor:
    a = as_tensor(a)
    idx = np.unravel_index(np.argmin(a.data), a.data.shape)
    data = np.asarray(a.data[idx])

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        _acc(a, full)

    return _node(data, (a,), backward)


def take(a, idx) -> Tensor:
    a = as_tensor(a)
    data = a.data[idx]

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        _acc(a, full)

    return _node(np.asarray(data), (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        start = 0
        for t, size in zip(tensors, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + size)
            _acc(t, g[tuple(sl)])
            start += size

    return _node(data, tuple(tensors), backward)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    data = a.data.reshape(shape)

    def backward(g):
        _acc(a, g.reshape(a.data.shape))

    return _node(data, (a,), backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    data = a.data.T

    def backward(g):
        _acc(a, g.T)

    return _node(data, (a,), backward)


def dropout(a, rate: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted-scaling dropout; identity when not training or rate is 0."""
    a = as_tensor(a)
    if not train or rate <= 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rng is None:
        raise ValueError("training-mode dropout needs an RNG")
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    data = a.data * mask

    def backward(g):
        _acc(a, g * mask)

    return _node(data, (a,), backward)


def layer_norm(a, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = tmean(a, axis=-1, keepdims=True)
    centered = add(a, mul(mu, -1.0))
    var = tmean(mul(centered, centered), axis=-1, keepdims=True)
    inv = div(centered, sqrt(add(var, eps)))
    return add(mul(inv, gamma), beta)
