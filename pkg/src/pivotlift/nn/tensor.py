"""Reverse-mode automatic differentiation on dense float64 arrays.

A Tensor wraps an ndarray and (optionally) the graph edge back to its
parents, each edge carrying a pullback closure that maps an upstream
gradient Tensor to a parent gradient Tensor. Pullbacks are written in
terms of the same public ops, so running backprop with create_graph=True
records the gradient computation itself and second derivatives (needed
for the discriminator's input-gradient penalty) come out of a second
backward pass.

Only the ops the networks and losses need are provided; everything is
float64 and deterministic.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

_GRAD_ENABLED = True


class no_grad:
    """Context manager disabling graph recording (fast inference path)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def grad_enabled():
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self, seed=None):
        backward(self, seed)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents):
    """Build an op result; parents is a sequence of (tensor, pullback)."""
    out = Tensor(data)
    if _GRAD_ENABLED:
        kept = tuple((p, pb) for p, pb in parents if p.requires_grad)
        if kept:
            out._parents = kept
            out.requires_grad = True
    return out


def _sum_to_shape(g, shape):
    """Reduce a broadcast gradient back to the parent's shape."""
    if g.shape == tuple(shape):
        return g
    extra = len(g.shape) - len(shape)
    if extra > 0:
        g = sum_(g, axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = sum_(g, axis=axes, keepdims=True)
    if g.shape != tuple(shape):
        g = reshape(g, shape)
    return g


# ---------------------------------------------------------------------------
# elementwise ops

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data + b.data,
        [
            (a, lambda g: _sum_to_shape(g, a.shape)),
            (b, lambda g: _sum_to_shape(g, b.shape)),
        ],
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data - b.data,
        [
            (a, lambda g: _sum_to_shape(g, a.shape)),
            (b, lambda g: _sum_to_shape(neg(g), b.shape)),
        ],
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data * b.data,
        [
            (a, lambda g: _sum_to_shape(mul(g, b), a.shape)),
            (b, lambda g: _sum_to_shape(mul(g, a), b.shape)),
        ],
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data / b.data,
        [
            (a, lambda g: _sum_to_shape(div(g, b), a.shape)),
            (b, lambda g: _sum_to_shape(neg(mul(g, div(a, mul(b, b)))), b.shape)),
        ],
    )


def neg(a):
    a = as_tensor(a)
    return _make(-a.data, [(a, lambda g: neg(g))])


def square(a):
    a = as_tensor(a)
    return _make(a.data * a.data, [(a, lambda g: mul(g, mul(a, 2.0)))])


def exp(a):
    a = as_tensor(a)
    out_data = np.exp(a.data)
    out_const = Tensor(out_data)
    return _make(out_data, [(a, lambda g: mul(g, _reexp(a, out_const)))])


def _reexp(a, cached):
    # Under create_graph the exp value must itself be differentiable wrt a;
    # without it the cached constant is cheaper.
    if _GRAD_ENABLED and a.requires_grad:
        return exp(a)
    return cached


def log(a):
    a = as_tensor(a)
    return _make(np.log(a.data), [(a, lambda g: div(g, a))])


def relu(a):
    a = as_tensor(a)
    mask = Tensor((a.data > 0.0).astype(np.float64))
    return _make(np.maximum(a.data, 0.0), [(a, lambda g: mul(g, mask))])


def clip(a, lo, hi):
    """Clamp with pass-through gradient inside [lo, hi], zero outside."""
    a = as_tensor(a)
    mask = Tensor(((a.data >= lo) & (a.data <= hi)).astype(np.float64))
    return _make(np.clip(a.data, lo, hi), [(a, lambda g: mul(g, mask))])


def minimum(a, b):
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data <= b.data
    ma = Tensor(take_a.astype(np.float64))
    mb = Tensor((~take_a).astype(np.float64))
    return _make(
        np.minimum(a.data, b.data),
        [
            (a, lambda g: _sum_to_shape(mul(g, ma), a.shape)),
            (b, lambda g: _sum_to_shape(mul(g, mb), b.shape)),
        ],
    )


# ---------------------------------------------------------------------------
# shape / reduction ops

def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    return _make(a.data.reshape(shape), [(a, lambda g: reshape(g, old))])


def transpose(a):
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a 2-d tensor, got shape {a.shape}")
    return _make(a.data.T.copy(), [(a, lambda g: transpose(g))])


def sum_(a, axis=None, keepdims=False):
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)
    old_shape = a.shape

    if axis is None:
        axes = tuple(range(len(old_shape)))
    elif isinstance(axis, int):
        axes = (axis % max(len(old_shape), 1),)
    else:
        axes = tuple(ax % len(old_shape) for ax in axis)
    keep_shape = tuple(
        1 if i in axes else n for i, n in enumerate(old_shape)
    )

    def pullback(g):
        return broadcast_to(reshape(g, keep_shape), old_shape)

    return _make(data, [(a, pullback)])


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        count = a.size
    elif isinstance(axis, int):
        count = a.shape[axis]
    else:
        count = int(np.prod([a.shape[ax] for ax in axis]))
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def broadcast_to(a, shape):
    a = as_tensor(a)
    old = a.shape
    return _make(
        np.broadcast_to(a.data, shape).copy(),
        [(a, lambda g: _sum_to_shape(g, old))],
    )


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(
            f"matmul expects 2-d tensors, got shapes {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    return _make(
        a.data @ b.data,
        [
            (a, lambda g: matmul(g, transpose(b))),
            (b, lambda g: matmul(transpose(a), g)),
        ],
    )


# ---------------------------------------------------------------------------
# backprop engine

def _topo_order(root):
    """Nodes reachable from root through requires_grad edges, parents last."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order  # children after their parents; iterate reversed for backprop


def _backprop(root, seed, create_graph):
    """Return {id(tensor): grad Tensor} for every requires_grad node."""
    order = _topo_order(root)
    grads = {id(root): seed}
    keep = {id(root): root}
    ctx = no_grad() if not create_graph else _nullctx()
    with ctx:
        for node in reversed(order):
            g = grads.get(id(node))
            if g is None:
                continue
            for parent, pullback in node._parents:
                pg = pullback(g)
                pid = id(parent)
                if pid in grads:
                    grads[pid] = add(grads[pid], pg)
                else:
                    grads[pid] = pg
                keep[pid] = parent
    return grads, keep


class _nullctx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def backward(out, seed=None):
    """Accumulate d(out)/d(leaf) into .grad (ndarray) of every
    requires_grad leaf reachable from out."""
    if not out.requires_grad:
        raise ValueError("backward on a tensor with no graph")
    if seed is None:
        seed = Tensor(np.ones_like(out.data))
    else:
        seed = as_tensor(seed)
    grads, keep = _backprop(out, seed, create_graph=False)
    for tid, g in grads.items():
        node = keep[tid]
        if node.requires_grad and not node._parents:
            if node.grad is None:
                node.grad = g.data.copy()
            else:
                node.grad = node.grad + g.data


def grad(out, wrt, seed=None, create_graph=False):
    """Gradients of `out` w.r.t. the tensors in `wrt`, returned as Tensors
    (graph-recorded when create_graph=True). Does not touch .grad fields."""
    single = isinstance(wrt, Tensor)
    targets = [wrt] if single else list(wrt)
    if seed is None:
        seed = Tensor(np.ones_like(out.data))
    else:
        seed = as_tensor(seed)
    grads, _ = _backprop(out, seed, create_graph=create_graph)
    results = []
    for t in targets:
        g = grads.get(id(t))
        if g is None:
            g = Tensor(np.zeros_like(t.data))
        results.append(g)
    return results[0] if single else results
