"""Adam with decoupled weight decay.

Decay is applied directly to the parameter (p -= lr*wd*p) before the
Adam delta, so it never enters the moment estimates.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError


class Adam:
    def __init__(self, params, lr=5e-5, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in parameter {i}")
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            m = self.m[i]
            v = self.v[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            mhat = m / b1t
            vhat = v / b2t
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def state_arrays(self):
        out = [("adam_t", np.array([float(self.t)]))]
        for i in range(len(self.params)):
            out.append((f"adam_m{i}", self.m[i]))
            out.append((f"adam_v{i}", self.v[i]))
        return out

    def load_state_arrays(self, arrays):
        named = dict(arrays)
        self.t = int(named["adam_t"][0])
        for i in range(len(self.params)):
            self.m[i] = np.asarray(named[f"adam_m{i}"], dtype=np.float64).reshape(
                self.m[i].shape).copy()
            self.v[i] = np.asarray(named[f"adam_v{i}"], dtype=np.float64).reshape(
                self.v[i].shape).copy()
