"""Clamped-Gaussian policy and value function over flat observations.

The mean network is an MLP; the log standard deviation is a free
state-independent parameter vector. Actions are sampled from the
Gaussian and clamped to [-1, 1] on the way to the environment, while
log-probabilities are always evaluated at the raw sample so the
importance ratios stay exact.
"""

from __future__ import annotations

import numpy as np

from ..nn import Mlp, MlpSpec, Tensor, no_grad
from ..nn import tensor as T

LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianPolicy:

    def __init__(self, obs_dim, act_dim, rng, hidden=(256, 128, 64),
                 log_std_init=-1.0, log_std_bounds=(-4.0, 1.0)):
        # small-scale output layer keeps early actions near the mean
        self.mean_net = Mlp(MlpSpec(obs_dim, hidden, act_dim), rng=rng,
                            out_scale=0.01)
        self.log_std = Tensor(np.full(act_dim, float(log_std_init)),
                              requires_grad=True)
        self.log_std_bounds = (float(log_std_bounds[0]),
                               float(log_std_bounds[1]))
        self.act_dim = act_dim

    @property
    def parameters(self):
        return self.mean_net.parameters + [self.log_std]

    def clamp_log_std(self):
        np.clip(self.log_std.data, self.log_std_bounds[0],
                self.log_std_bounds[1], out=self.log_std.data)

    def act(self, obs, rng):
        """Sample raw actions and their log-probs. (B, obs) -> three
        arrays: raw action, clamped action, log-prob."""
        with no_grad():
            mean = self.mean_net.forward_np(obs)
        std = np.exp(self.log_std.data)
        noise = rng.standard_normal(mean.shape)
        raw = mean + std * noise
        logp = self._log_prob_np(raw, mean)
        return raw, np.clip(raw, -1.0, 1.0), logp

    def mean_action(self, obs):
        """Deterministic action for evaluation."""
        with no_grad():
            return np.clip(self.mean_net.forward_np(obs), -1.0, 1.0)

    def log_prob_np(self, obs, raw):
        """Log-probs of given raw actions, no graph."""
        with no_grad():
            mean = self.mean_net.forward_np(obs)
        return self._log_prob_np(raw, mean)

    def _log_prob_np(self, raw, mean):
        std = np.exp(self.log_std.data)
        z = (raw - mean) / std
        return (-0.5 * np.sum(z * z, axis=-1)
                - np.sum(self.log_std.data)
                - 0.5 * self.act_dim * LOG_2PI)

    def log_prob(self, obs, raw_actions):
        """Graph log-probs of stored raw actions, for the update."""
        mean = self.mean_net(Tensor(obs))
        std = T.exp(self.log_std)
        z = (Tensor(raw_actions) - mean) / std
        quad = T.sum_(T.square(z), axis=1)
        return (-0.5 * quad - T.sum_(self.log_std)
                - 0.5 * self.act_dim * LOG_2PI)

    def entropy(self):
        """Graph entropy of the current Gaussian (state-independent)."""
        return T.sum_(self.log_std) + 0.5 * self.act_dim * (1.0 + LOG_2PI)

    def state_arrays(self):
        return self.mean_net.state_arrays() + [("log_std", self.log_std.data)]

    def load_state_arrays(self, arrays):
        named = dict(arrays)
        self.log_std.data = np.asarray(named.pop("log_std"),
                                       dtype=np.float64).copy()
        self.mean_net.load_state_arrays(list(named.items()))


class ValueNet:

    def __init__(self, obs_dim, rng, hidden=(256, 128, 64)):
        self.net = Mlp(MlpSpec(obs_dim, hidden, 1), rng=rng)

    @property
    def parameters(self):
        return self.net.parameters

    def values(self, obs):
        with no_grad():
            return self.net.forward_np(obs)[:, 0]

    def values_graph(self, obs):
        return T.reshape(self.net(Tensor(obs)), (-1,))

    def state_arrays(self):
        return [("v_" + k, v) for k, v in self.net.state_arrays()]

    def load_state_arrays(self, arrays):
        self.net.load_state_arrays(
            [(k[2:], v) for k, v in arrays if k.startswith("v_")])
