"""Reverse-mode automatic differentiation over dense numpy arrays.

A :class:`Tensor` is a node in a computation graph. Operations evaluate
eagerly by default; inside :func:`deferred` they only record the graph, and
:func:`forward` evaluates it. :func:`forward` can also be called on an eager
graph to recompute every node from the current leaf values, which is what the
finite-difference checker relies on.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Optional, Sequence

import numpy as np


class GraphError(RuntimeError):
    """Raised for misuse of the graph (backward before forward, bad root)."""


class ShapeError(ValueError):
    """Operand shapes incompatible with an operation."""

    def __init__(self, op: str, shapes: Sequence[tuple], detail: str = ""):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        msg = f"{op}: incompatible shapes " + " and ".join(str(s) for s in self.shapes)
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


_EAGER = True


@contextlib.contextmanager
def deferred() -> Iterator[None]:
    """Build graphs without evaluating them until :func:`forward` is called."""
    global _EAGER
    prev, _EAGER = _EAGER, False
    try:
        yield
    finally:
        _EAGER = prev


class Tensor:
    """Graph node holding an array value and, after backward, its gradient."""

    __slots__ = ("data", "grad", "parents", "op", "requires_grad", "name", "_fwd", "_bwd")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None,
                 dtype=None):
        if data is not None:
            arr = np.asarray(data)
            if dtype is not None:
                arr = arr.astype(dtype, copy=False)
            elif not np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype(np.float64)
            data = arr
        self.data: Optional[np.ndarray] = data
        self.grad: Optional[np.ndarray] = None
        self.parents: tuple[Tensor, ...] = ()
        self.op = "leaf"
        self.requires_grad = requires_grad
        self.name = name
        self._fwd: Optional[Callable] = None
        self._bwd: Optional[Callable] = None

    @property
    def shape(self) -> tuple:
        if self.data is None:
            raise GraphError(f"node {self.op!r} has not been evaluated")
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        shape = None if self.data is None else self.data.shape
        label = self.name or self.op
        return f"Tensor({label}, shape={shape}, requires_grad={self.requires_grad})"

    # Operator sugar; implementations live in ops.
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        if isinstance(other, Tensor):
            return ops.div(self, other)
        return ops.mul(self, 1.0 / other)

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, idx):
        from . import ops
        return ops.getitem(self, idx)


def as_tensor(x, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = None
    if like is not None and like.data is not None:
        dtype = like.data.dtype
    return Tensor(np.asarray(x), dtype=dtype)


def make_node(op: str, parents: Sequence[Tensor], fwd: Callable, bwd: Callable) -> Tensor:
    """Create a derived node.

    ``fwd(*parent_values) -> value``; ``bwd(grad, value, *parent_values)`` returns
    one gradient (or None) per parent.
    """
    out = Tensor(None)
    out.op = op
    out.parents = tuple(parents)
    out.requires_grad = any(p.requires_grad for p in parents)
    out._fwd = fwd
    out._bwd = bwd
    if _EAGER:
        out.data = _evaluate(out)
    return out


def _evaluate(node: Tensor) -> np.ndarray:
    vals = []
    for p in node.parents:
        if p.data is None:
            raise GraphError(f"input of {node.op!r} has no value")
        vals.append(p.data)
    try:
        return node._fwd(*vals)
    except ValueError as exc:
        if isinstance(exc, ShapeError):
            raise
        raise ShapeError(node.op, [v.shape for v in vals], str(exc)) from exc


def topological_order(root: Tensor) -> list[Tensor]:
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
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def forward(root: Tensor) -> np.ndarray:
    """Evaluate (or re-evaluate) every node of the graph from its leaves."""
    for node in topological_order(root):
        if node.is_leaf:
            if node.data is None:
                raise GraphError(f"leaf {node.name or ''!r} has no assigned value")
            continue
        node.data = _evaluate(node)
    return root.data


class SliceGrad:
    """Gradient that is nonzero only on a basic-index region of its parent."""

    __slots__ = ("index", "value")

    def __init__(self, index, value: np.ndarray):
        self.index = index
        self.value = value


def _dense(pg, like: np.ndarray) -> np.ndarray:
    if isinstance(pg, SliceGrad):
        out = np.zeros_like(like)
        out[pg.index] = pg.value
        return out
    return pg


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(node) into ``grad`` of every node that requires it.

    Leaf gradients add onto any existing ``grad`` so repeated passes (or shared
    leaves) accumulate; call ``zero_grad`` between independent passes.
    """
    if root.data is None:
        raise GraphError("backward called before forward")
    if root.data.size != 1:
        raise GraphError(f"backward needs a scalar root, got shape {root.data.shape}")
    order = topological_order(root)
    # id -> [array, owned]; owned buffers were allocated here and may be updated in place
    grads: dict[int, list] = {id(root): [np.ones_like(root.data), True]}
    for node in reversed(order):
        entry = grads.pop(id(node), None)
        if entry is None or not node.requires_grad:
            continue
        g = entry[0]
        if node.is_leaf:
            node.grad = g if node.grad is None else node.grad + g
            continue
        node.grad = g
        pgrads = node._bwd(g, node.data, *[p.data for p in node.parents])
        for p, pg in zip(node.parents, pgrads):
            if pg is None or not p.requires_grad:
                continue
            key = id(p)
            slot = grads.get(key)
            if slot is None:
                if isinstance(pg, SliceGrad):
                    grads[key] = [_dense(pg, p.data), True]
                else:
                    grads[key] = [pg, False]
                continue
            if not slot[1]:
                slot[0] = slot[0].copy()
                slot[1] = True
            if isinstance(pg, SliceGrad):
                slot[0][pg.index] += pg.value
            else:
                slot[0] += pg
