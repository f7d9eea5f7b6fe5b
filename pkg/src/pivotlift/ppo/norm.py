from __future__ import annotations

import numpy as np


class RunningNorm:
    """Streaming mean/variance over observation batches.

    Stats are updated once per collected batch and held fixed through
    the optimization phase, so every minibatch of an update sees the
    same normalization.
    """

    def __init__(self, dim, eps=1e-8):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 0.0
        self.eps = eps

    def update(self, batch):
        x = np.asarray(batch, dtype=np.float64).reshape(-1, self.mean.size)
        n = x.shape[0]
        if n == 0:
            return
        batch_mean = x.mean(axis=0)
        batch_var = x.var(axis=0)
        # Chan et al. parallel merge of (count, mean, var)
        total = self.count + n
        delta = batch_mean - self.mean
        self.mean = self.mean + delta * (n / total)
        m2 = (self.var * self.count + batch_var * n
              + delta * delta * self.count * n / total)
        self.var = m2 / total
        self.count = total

    def normalize(self, x):
        if self.count == 0.0:
            return np.asarray(x, dtype=np.float64)
        # no z-score clipping: early stats are tight around the spawn
        # distribution and a clip would flatten every far-field state
        # onto one point, hiding unexplored regions from the nets
        return (x - self.mean) / np.sqrt(self.var + self.eps)

    def state_arrays(self):
        return [("norm_mean", self.mean), ("norm_var", self.var),
                ("norm_count", np.array([self.count]))]

    def load_state_arrays(self, arrays):
        named = dict(arrays)
        self.mean = np.asarray(named["norm_mean"], dtype=np.float64).copy()
        self.var = np.asarray(named["norm_var"], dtype=np.float64).copy()
        self.count = float(named["norm_count"][0])
