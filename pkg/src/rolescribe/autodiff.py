"""Reverse-mode differentiation over numpy arrays.

A `Tensor` wraps an ndarray and remembers the op that produced it; calling
`backward()` on a scalar result walks the recorded graph in exact reverse
topological order and accumulates gradients into every tensor created with
`requires_grad=True`. Ops whose inputs all have `requires_grad=False` record
nothing, so inference through the same code paths carries no tape cost.

The primitive set is intentionally small: matrix multiply, broadcast
add/mul, elementwise tanh/sigmoid/relu, concatenation, basic slicing,
reshape, sum, log-softmax, embedding lookup, same-padded 1D convolution,
non-overlapping max pooling, and a fused LSTM step/sequence built on the
kernels in :mod:`rolescribe.numerics`.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import numerics


class Tensor:
    """A node in the differentiation graph; `data` is always an ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def backward(self, seed: float | np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every requires_grad leaf.

        `seed` defaults to 1.0 and must be given explicitly for non-scalar
        outputs. Repeated calls (e.g. one per batch element) keep adding into
        `.grad`, which is exactly what summed-gradient batching needs.
        """
        if not self.requires_grad:
            raise ValueError("backward() on a tensor that requires no gradient")
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() needs an explicit seed for non-scalars")
            seed = 1.0
        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.broadcast_to(
            np.asarray(seed, dtype=self.data.dtype), self.data.shape).copy()}
        for node in reversed(order):
            gout = grads.pop(id(node), None)
            if gout is None:
                continue
            if node._backward is None:
                # leaf: park the gradient on the tensor itself
                if node.grad is None:
                    node.grad = gout
                else:
                    node.grad = node.grad + gout
                continue
            for parent, g in zip(node._parents, node._backward(gout)):
                if g is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] += g
                else:
                    grads[key] = np.array(g, dtype=parent.data.dtype, copy=True)

    # Operator sugar; the module-level functions do the work.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def parameter(data) -> Tensor:
    return Tensor(np.asarray(data), requires_grad=True)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value))


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def make_op(data: np.ndarray, parents: Sequence[Tensor],
            backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    """Create a graph node; records nothing if no parent needs gradients."""
    if not any(p.requires_grad for p in parents):
        return Tensor(data)
    out = Tensor(data, requires_grad=True)
    out._parents = tuple(parents)
    out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data
    return make_op(out, (a, b), lambda g: (
        _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data
    return make_op(out, (a, b), lambda g: (
        _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.data.ndim != 2 or a.data.ndim not in (1, 2):
        raise ValueError(f"matmul supports (T,K)@(K,N) or (K,)@(K,N); got {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def backward(g):
        if a.data.ndim == 1:
            return g @ b.data.T, np.outer(a.data, g)
        return g @ b.data.T, a.data.T @ g

    return make_op(out, (a, b), backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return make_op(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = numerics.sigmoid(a.data)
    return make_op(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return make_op(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def sum_(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy(),)

    return make_op(out, (a,), backward)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return make_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.data.shape),))


def take(a, key) -> Tensor:
    """Basic indexing/slicing (ints, slices, tuples; negative steps allowed)."""
    a = as_tensor(a)
    out = a.data[key]

    def backward(g):
        buf = np.zeros_like(a.data)
        buf[key] += g
        return (buf,)

    return make_op(np.array(out, copy=True), (a,), backward)


def concat(parts: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(p) for p in parts]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return make_op(out, tensors, backward)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_op(out, (a,), backward)


def embedding(weight, ids: np.ndarray) -> Tensor:
    weight = as_tensor(weight)
    ids = np.asarray(ids, dtype=np.int64)
    out = weight.data[ids]

    def backward(g):
        dw = np.zeros_like(weight.data)
        np.add.at(dw, ids, g)
        return (dw,)

    return make_op(np.array(out, copy=True), (weight,), backward)


def conv1d(x, w, b) -> Tensor:
    """Same-padded temporal convolution; w is the (K*Cin, Cout) im2col matrix."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    t_len, channels = x.data.shape
    kernel = w.data.shape[0] // channels
    cols = numerics.conv1d_cols(x.data, kernel)
    out = cols @ w.data + b.data

    def backward(g):
        dcols = g @ w.data.T
        dx = numerics.conv1d_cols_backward(dcols, t_len, channels, kernel)
        return dx, cols.T @ g, g.sum(axis=0)

    return make_op(out, (x, w, b), backward)


def maxpool1d(x, size: int) -> Tensor:
    x = as_tensor(x)
    pooled, idx = numerics.maxpool1d_forward(x.data, size)
    t_in = x.data.shape[0]
    return make_op(pooled, (x,), lambda g: (
        numerics.maxpool1d_backward(g, idx, t_in, size),))


def lstm_sequence(zx, w_h) -> Tensor:
    """Run an LSTM over precomputed gate inputs zx = x @ w_x + b, zero start state.

    Forward and backward both iterate over time inside this single node, so a
    whole recurrent layer costs O(1) graph nodes. Returns the (T, H) hidden
    sequence.
    """
    zx, w_h = as_tensor(zx), as_tensor(w_h)
    t_len = zx.data.shape[0]
    hidden = w_h.data.shape[0]
    dtype = zx.data.dtype
    h = np.zeros(hidden, dtype=dtype)
    c = np.zeros(hidden, dtype=dtype)
    caches = []
    out = np.empty((t_len, hidden), dtype=dtype)
    for t in range(t_len):
        h, c, cache = numerics.lstm_cell_forward(zx.data[t], h, c, w_h.data)
        caches.append(cache)
        out[t] = h

    def backward(g):
        dzx = np.empty_like(zx.data)
        dw_h = np.zeros_like(w_h.data)
        dh = np.zeros(hidden, dtype=dtype)
        dc = np.zeros(hidden, dtype=dtype)
        for t in range(t_len - 1, -1, -1):
            dz, dh, dc, dwh_t = numerics.lstm_cell_backward(
                g[t] + dh, dc, caches[t], w_h.data)
            dzx[t] = dz
            dw_h += dwh_t
        return dzx, dw_h

    return make_op(out, (zx, w_h), backward)


def lstm_step(x, h_prev, c_prev, w_x, w_h, b) -> tuple[Tensor, Tensor]:
    """Differentiable single LSTM step; returns (hidden, cell) tensors."""
    x, h_prev, c_prev = as_tensor(x), as_tensor(h_prev), as_tensor(c_prev)
    w_x, w_h, b = as_tensor(w_x), as_tensor(w_h), as_tensor(b)
    zx = add(matmul(x, w_x), b)
    h_arr, c_arr, cache = numerics.lstm_cell_forward(
        zx.data, h_prev.data, c_prev.data, w_h.data)
    stacked_data = np.stack([h_arr, c_arr])

    def backward(g):
        dz, dh_prev, dc_prev, dw_h = numerics.lstm_cell_backward(
            g[0], g[1], cache, w_h.data)
        return dz, dh_prev, dc_prev, dw_h

    stacked = make_op(stacked_data, (zx, h_prev, c_prev, w_h), backward)
    return stacked[0], stacked[1]
