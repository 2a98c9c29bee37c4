"""Reverse-mode automatic differentiation over float64 numpy arrays.

A ``Tensor`` records the operation that produced it and a vector-Jacobian
product closure.  ``backward`` walks the graph once in reverse topological
order and accumulates gradients into every tensor created with ``param`` (or
any tensor downstream of one).  Graphs are built fresh per loss evaluation;
nothing is retained between calls.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "as_tensor",
    "param",
    "backward",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "relu",
    "tanh",
    "exp",
    "log",
    "softplus",
    "clip",
    "concat",
    "tsum",
    "tmean",
    "numerical_gradient",
]


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, value, *, parents=(), vjp=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self._parents = tuple(parents)
        self._vjp = vjp
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in self._parents
        )
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("division only supported by a plain scalar")
        return mul(self, 1.0 / float(scalar))


def as_tensor(x) -> Tensor:
    """Wrap a value as a constant (no gradient) tensor."""
    return x if isinstance(x, Tensor) else Tensor(x)


def param(x) -> Tensor:
    """Wrap a value as a leaf tensor that accumulates gradient."""
    return Tensor(x, requires_grad=True)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.value + b.value

    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Tensor(out, parents=(a, b), vjp=vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.value - b.value

    def vjp(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return Tensor(out, parents=(a, b), vjp=vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.value * b.value

    def vjp(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return Tensor(out, parents=(a, b), vjp=vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(-a.value, parents=(a,), vjp=lambda g: (-g,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.value @ b.value

    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return Tensor(out, parents=(a, b), vjp=vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0.0
    return Tensor(np.where(mask, a.value, 0.0), parents=(a,), vjp=lambda g: (g * mask,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.value)
    return Tensor(t, parents=(a,), vjp=lambda g: (g * (1.0 - t * t),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.value)
    return Tensor(e, parents=(a,), vjp=lambda g: (g * e,))


def log(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.log(a.value), parents=(a,), vjp=lambda g: (g / a.value,))


def softplus(a) -> Tensor:
    """log(1 + exp(x)) computed without overflow; gradient is sigmoid(x)."""
    a = as_tensor(a)
    x = a.value
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    sig = 0.5 * (1.0 + np.tanh(0.5 * x))
    return Tensor(out, parents=(a,), vjp=lambda g: (g * sig,))


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient flows where the input lies inside."""
    a = as_tensor(a)
    mask = (a.value >= lo) & (a.value <= hi)
    return Tensor(
        np.clip(a.value, lo, hi), parents=(a,), vjp=lambda g: (g * mask,)
    )


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.value.shape[axis] for t in tensors]
    out = np.concatenate([t.value for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(out, parents=tuple(tensors), vjp=vjp)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return Tensor(out, parents=(a,), vjp=vjp)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        n = a.value.size
    else:
        n = a.value.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def backward(out: Tensor, seed=None) -> None:
    """Accumulate gradients of ``out`` into every upstream tensor's ``.grad``.

    ``out`` must be scalar unless an explicit ``seed`` cotangent of the same
    shape is given.
    """
    if seed is None:
        if out.value.size != 1:
            raise ValueError("backward() on a non-scalar needs an explicit seed")
        seed = np.ones_like(out.value)
    else:
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != out.value.shape:
            raise ValueError("seed cotangent shape must match the output shape")
    if not out.requires_grad:
        return

    # Iterative depth-first topological sort (graphs can be deep).
    order: list[Tensor] = []
    state: dict[int, int] = {}
    stack: list[Tensor] = [out]
    while stack:
        node = stack[-1]
        key = id(node)
        if state.get(key, 0) == 1:
            stack.pop()
            state[key] = 2
            order.append(node)
            continue
        if state.get(key, 0) == 2:
            stack.pop()
            continue
        state[key] = 1
        for parent in node._parents:
            if parent.requires_grad and state.get(id(parent), 0) == 0:
                stack.append(parent)

    out.grad = seed
    for node in reversed(order):
        if node._vjp is None or node.grad is None:
            continue
        for parent, pgrad in zip(node._parents, node._vjp(node.grad)):
            if not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.array(pgrad, dtype=np.float64, copy=True)
            else:
                parent.grad = parent.grad + pgrad


def numerical_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar-valued ``f`` at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad
