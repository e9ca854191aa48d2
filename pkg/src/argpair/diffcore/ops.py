"""Differentiable primitives.

Every function takes :class:`Tensor` operands (plain arrays and scalars are
lifted to constant leaves) and returns a new node. Elementwise ops broadcast
like numpy; their gradients are summed back to the operand shapes.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .tensor import ShapeError, SliceGrad, Tensor, as_tensor, make_node


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _lift(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def add(a, b) -> Tensor:
    a, b = _lift(a, b)
    return make_node(
        "add", (a, b), np.add,
        lambda g, out, x, y: (_unbroadcast(g, x.shape), _unbroadcast(g, y.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _lift(a, b)
    return make_node(
        "sub", (a, b), np.subtract,
        lambda g, out, x, y: (_unbroadcast(g, x.shape), _unbroadcast(-g, y.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _lift(a, b)
    return make_node(
        "mul", (a, b), np.multiply,
        lambda g, out, x, y: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _lift(a, b)
    return make_node(
        "div", (a, b), np.divide,
        lambda g, out, x, y: (_unbroadcast(g / y, x.shape),
                              _unbroadcast(-g * x / (y * y), y.shape)),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix-matrix, matrix-vector or vector-matrix product (batched over leading dims of ``a``)."""
    a, b = _lift(a, b)

    def fwd(x, y):
        if x.shape[-1] != y.shape[0] or y.ndim > 2:
            raise ShapeError("matmul", [x.shape, y.shape], "inner dimensions differ")
        return x @ y

    def bwd(g, out, x, y):
        if y.ndim == 1:
            gx = g[..., None] * y
            gy = np.tensordot(g, x, axes=(tuple(range(g.ndim)), tuple(range(g.ndim))))
            return gx, gy
        if x.ndim == 1:
            return y @ g, np.outer(x, g)
        gx = g @ y.T
        x2 = x.reshape(-1, x.shape[-1])
        g2 = g.reshape(-1, g.shape[-1])
        return gx, x2.T @ g2

    return make_node("matmul", (a, b), fwd, bwd)


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product over the last axis (batched)."""
    a, b = _lift(a, b)

    def fwd(x, y):
        if x.shape[-1] != y.shape[-1]:
            raise ShapeError("dot", [x.shape, y.shape])
        return np.sum(x * y, axis=-1)

    def bwd(g, out, x, y):
        ge = g[..., None]
        return _unbroadcast(ge * y, x.shape), _unbroadcast(ge * x, y.shape)

    return make_node("dot", (a, b), fwd, bwd)


def sigmoid(a: Tensor) -> Tensor:
    def fwd(x):
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out

    return make_node("sigmoid", (a,), fwd, lambda g, out, x: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    return make_node("tanh", (a,), np.tanh, lambda g, out, x: (g * (1.0 - out * out),))


def relu(a: Tensor) -> Tensor:
    """Rectifier; also serves as the scalar max-with-zero of the hinge loss."""
    return make_node("relu", (a,), lambda x: np.maximum(x, 0.0),
                     lambda g, out, x: (g * (x > 0),))


def exp(a: Tensor) -> Tensor:
    return make_node("exp", (a,), np.exp, lambda g, out, x: (g * out,))


def log(a: Tensor) -> Tensor:
    return make_node("log", (a,), np.log, lambda g, out, x: (g / x,))


def softmax(a: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Softmax over the last axis. ``mask`` (bool, broadcastable) zeroes excluded entries."""
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)

    def fwd(x):
        if mask is None:
            z = x - x.max(axis=-1, keepdims=True)
            e = np.exp(z)
        else:
            m = np.broadcast_to(mask, x.shape)
            big = np.where(m, x, -np.inf).max(axis=-1, keepdims=True)
            big = np.where(np.isfinite(big), big, 0.0)
            e = np.where(m, np.exp(np.where(m, x - big, 0.0)), 0.0)
        s = e.sum(axis=-1, keepdims=True)
        return e / np.where(s > 0, s, 1.0)

    def bwd(g, out, x):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return make_node("softmax", (a,), fwd, bwd)


def log_softmax(a: Tensor) -> Tensor:
    def fwd(x):
        z = x - x.max(axis=-1, keepdims=True)
        return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))

    def bwd(g, out, x):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return make_node("log_softmax", (a,), fwd, bwd)


def conv1d(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Valid-mode 1-D convolution.

    ``x``: (..., L, C_in); ``w``: (window, C_in, C_out); output (..., L - window + 1, C_out).
    Output position ``i`` sees inputs ``i .. i + window - 1``.
    """
    x = as_tensor(x)
    w = as_tensor(w, like=x)

    def windows(v, ws):
        # (..., P, ws, C_in) view
        return np.lib.stride_tricks.sliding_window_view(v, ws, axis=-2).swapaxes(-1, -2)

    def fwd(xv, wv):
        ws, cin, _ = wv.shape
        if xv.shape[-1] != cin or xv.shape[-2] < ws:
            raise ShapeError("conv1d", [xv.shape, wv.shape], "need L >= window and matching channels")
        return np.tensordot(windows(xv, ws), wv, axes=([-2, -1], [0, 1]))

    def bwd(g, out, xv, wv):
        ws = wv.shape[0]
        win = windows(xv, ws)
        lead = tuple(range(g.ndim - 1))
        gw = np.tensordot(win, g, axes=(lead, lead))  # (ws, C_in, C_out)
        gwin = np.tensordot(g, wv, axes=([-1], [2]))  # (..., P, ws, C_in)
        gx = np.zeros_like(xv)
        n_pos = g.shape[-2]
        for k in range(ws):
            gx[..., k:k + n_pos, :] += gwin[..., :, k, :]
        return gx, gw

    out = make_node("conv1d", (x, w), fwd, bwd)
    if b is not None:
        out = add(out, b)
    return out


def embedding(weight: Tensor, ids) -> Tensor:
    """Row gather ``weight[ids]`` for an integer array of any shape."""
    ids = np.asarray(ids, dtype=np.int64)

    def fwd(w):
        if ids.size and (ids.min() < 0 or ids.max() >= w.shape[0]):
            raise ShapeError("embedding", [w.shape, ids.shape], "id out of range")
        return w[ids]

    def bwd(g, out, w):
        gw = np.zeros_like(w)
        np.add.at(gw, ids.reshape(-1), g.reshape(-1, w.shape[1]))
        return (gw,)

    return make_node("embedding", (weight,), fwd, bwd)


def _is_basic_index(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(p, (int, np.integer, slice)) or p is Ellipsis or p is None for p in parts)


def getitem(a: Tensor, idx) -> Tensor:
    basic = _is_basic_index(idx)

    def bwd(g, out, x):
        if basic:
            return (SliceGrad(idx, g),)
        gx = np.zeros_like(x)
        np.add.at(gx, idx, g)
        return (gx,)

    return make_node("getitem", (a,), lambda x: x[idx], bwd)


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]

    def fwd(*vals):
        return np.concatenate(vals, axis=axis)

    def bwd(g, out, *vals):
        splits = np.cumsum([v.shape[axis] for v in vals])[:-1]
        return tuple(np.split(g, splits, axis=axis))

    return make_node("concat", xs, fwd, bwd)


def stack(xs: Sequence[Tensor], axis: int = 0) -> Tensor:
    xs = [as_tensor(x) for x in xs]

    def bwd(g, out, *vals):
        return tuple(np.moveaxis(g, axis, 0))

    return make_node("stack", xs, lambda *vals: np.stack(vals, axis=axis), bwd)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    return make_node("reshape", (a,), lambda x: x.reshape(shape),
                     lambda g, out, x: (g.reshape(x.shape),))


def transpose(a: Tensor, axes: Optional[tuple] = None) -> Tensor:
    inv = None if axes is None else tuple(np.argsort(axes))
    return make_node("transpose", (a,), lambda x: np.transpose(x, axes),
                     lambda g, out, x: (np.transpose(g, inv),))


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def bwd(g, out, x):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_node("sum", (a,), lambda x: np.sum(x, axis=axis, keepdims=keepdims), bwd)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def bwd(g, out, x):
        n = x.size if axis is None else np.prod([x.shape[i] for i in np.atleast_1d(axis)])
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, x.shape).copy(),)

    return make_node("mean", (a,), lambda x: np.mean(x, axis=axis, keepdims=keepdims), bwd)


def where(cond, a, b) -> Tensor:
    """Select ``a`` where the constant boolean ``cond`` holds, else ``b``."""
    cond = np.asarray(cond, dtype=bool)
    a, b = _lift(a, b)
    return make_node(
        "where", (a, b), lambda x, y: np.where(cond, x, y),
        lambda g, out, x, y: (_unbroadcast(np.where(cond, g, 0.0), x.shape),
                              _unbroadcast(np.where(cond, 0.0, g), y.shape)),
    )
