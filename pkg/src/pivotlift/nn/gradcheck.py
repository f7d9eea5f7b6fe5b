"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import tensor as T


def finite_diff_check(f, params, h=1e-6, rel_tol=1e-5):
    """Compare analytic grads of scalar-valued f against central differences.

    f: callable taking no args, returning a Tensor; it must read the
       current values of `params` (list of requires_grad Tensors).
    Returns (max_rel_err, ok). Relative error uses denominator
    max(1e-12, |analytic| + |numeric|) per component.
    """
    if h <= 0.0:
        raise ShapeError(f"step size must be positive, got {h}")
    params = list(params)

    out = f()
    scalar = T.sum_(out) if out.data.ndim > 0 and out.size != 1 else out
    for p in params:
        p.grad = None
    T.backward(scalar)
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        for p in params
    ]

    max_rel = 0.0
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        an = analytic[pi].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            with T.no_grad():
                fp = float(np.sum(f().data))
            flat[j] = orig - h
            with T.no_grad():
                fm = float(np.sum(f().data))
            flat[j] = orig
            num = (fp - fm) / (2.0 * h)
            denom = max(1e-12, abs(an[j]) + abs(num))
            rel = abs(an[j] - num) / denom
            if rel > max_rel:
                max_rel = rel
    return max_rel, max_rel <= rel_tol


def check_mlp(net, x, h=1e-6, rel_tol=1e-5):
    """Gradcheck an Mlp on input batch x using sum-of-outputs as the scalar."""
    x = np.asarray(x, dtype=np.float64)

    def f():
        return net.forward(x)

    return finite_diff_check(f, net.parameters, h=h, rel_tol=rel_tol)
