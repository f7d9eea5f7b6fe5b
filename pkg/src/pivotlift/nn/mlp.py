"""Fully connected ReLU networks on top of the tensor graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, StateError
from . import tensor as T


@dataclass(frozen=True)
class MlpSpec:
    """Architecture description: input width, hidden widths, output width.

    Hidden layers use ReLU; the output layer is linear.
    """

    in_dim: int
    hidden: tuple = (256, 128, 64)
    out_dim: int = 1

    def __post_init__(self):
        dims = (self.in_dim,) + tuple(self.hidden) + (self.out_dim,)
        for d in dims:
            if not isinstance(d, (int, np.integer)) or d <= 0:
                raise ShapeError(f"layer widths must be positive ints, got {dims}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def layer_dims(self):
        return (self.in_dim,) + self.hidden + (self.out_dim,)


class Mlp:
    """Dense ReLU network with float64 parameters.

    Weights are He-style uniform U(+-sqrt(6/fan_in)), biases zero.
    `out_scale` shrinks the final layer's weights at init (small initial
    policy outputs keep early actions near zero).
    """

    def __init__(self, spec, rng=None, out_scale=1.0):
        if not isinstance(spec, MlpSpec):
            spec = MlpSpec(*spec)
        self.spec = spec
        if rng is None:
            rng = np.random.default_rng(0)
        self.weights = []
        self.biases = []
        dims = spec.layer_dims
        last = len(dims) - 2
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            if i == last:
                w *= out_scale
            self.weights.append(T.Tensor(w, requires_grad=True))
            self.biases.append(T.Tensor(np.zeros(fan_out), requires_grad=True))
        self._last_out = None

    @property
    def parameters(self):
        return list(self.weights) + list(self.biases)

    def num_parameters(self):
        return sum(p.size for p in self.parameters)

    def forward(self, x):
        """Graph-recorded forward pass. x: Tensor or array, (B, in) or (in,)."""
        x = T.as_tensor(x)
        squeeze = x.data.ndim == 1
        if squeeze:
            x = T.reshape(x, (1, -1))
        if x.data.ndim != 2 or x.shape[1] != self.spec.in_dim:
            raise ShapeError(
                f"expected input width {self.spec.in_dim}, got shape {x.shape}"
            )
        h = x
        n = len(self.weights)
        for i in range(n):
            h = T.add(T.matmul(h, self.weights[i]), self.biases[i])
            if i < n - 1:
                h = T.relu(h)
        if squeeze:
            h = T.reshape(h, (self.spec.out_dim,))
        self._last_out = h
        return h

    def __call__(self, x):
        return self.forward(x)

    def forward_np(self, x):
        """Graph-free forward on raw arrays (rollout hot path)."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.spec.in_dim:
            raise ShapeError(
                f"expected input width {self.spec.in_dim}, got shape {x.shape}"
            )
        h = x
        n = len(self.weights)
        for i in range(n):
            h = h @ self.weights[i].data + self.biases[i].data
            if i < n - 1:
                np.maximum(h, 0.0, out=h)
        return h[0] if squeeze else h

    def backward(self, seed=None):
        """Backprop through the most recent forward() into parameter .grad."""
        if self._last_out is None:
            raise StateError("backward called before any forward pass")
        T.backward(self._last_out, seed)

    def zero_grad(self):
        for p in self.parameters:
            p.grad = None
        self._last_out = None

    def state_arrays(self):
        """Ordered (name, ndarray) pairs, layer-major, weight before bias."""
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w.data))
            out.append((f"b{i}", b.data))
        return out

    def load_state_arrays(self, arrays):
        named = dict(arrays)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            for key, param in ((f"w{i}", w), (f"b{i}", b)):
                if key not in named:
                    raise ShapeError(f"missing parameter array {key}")
                val = np.asarray(named[key], dtype=np.float64)
                if val.shape != param.data.shape:
                    raise ShapeError(
                        f"{key}: shape {val.shape} != expected {param.data.shape}"
                    )
                param.data = val.copy()
