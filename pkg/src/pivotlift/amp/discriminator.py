"""Least-squares adversarial discriminator over motion transitions.

The discriminator scores normalized 8-dim transitions; demonstrations
are regressed toward +1 and policy samples toward -1, with a gradient
penalty taken at the demonstration samples. The penalty needs the
gradient-of-gradient path, so the score network is built on the graph
tensors rather than the flat numpy forward.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, StateError
from ..nn import Adam, Mlp, MlpSpec, Tensor, no_grad
from ..nn import tensor as T
from .transitions import TRANSITION_DIM

GRADIENT_PENALTY_WEIGHT = 10.0
MINIBATCH = 512
MINIBATCHES_PER_EPOCH = 8


def lsgan_loss(d_demo, d_policy, grad_sq_demo, gp_weight=GRADIENT_PENALTY_WEIGHT):
    """Scalar loss tensor from per-sample scores and squared grad norms."""
    demo_term = T.mean(T.square(d_demo - 1.0))
    policy_term = T.mean(T.square(d_policy + 1.0))
    penalty = T.mean(grad_sq_demo)
    return demo_term + policy_term + gp_weight * penalty


def style_reward(scores):
    """max(0, 1 - (d - 1)^2 / 4), elementwise over raw scores."""
    d = np.asarray(scores, dtype=np.float64)
    return np.maximum(0.0, 1.0 - 0.25 * np.square(d - 1.0))


def combined_reward(task_reward, style, style_mix):
    """Blend task and style rewards.

    style_mix is the weight on the task term. The endpoints return the
    untouched input array so a pure-task run is bitwise identical to one
    that never built a discriminator.
    """
    if style_mix == 1.0:
        return task_reward
    if style_mix == 0.0:
        return style
    return style_mix * task_reward + (1.0 - style_mix) * style


class AmpDiscriminator:
    """Score network plus its optimizer and update rule."""

    def __init__(self, rng, hidden=(256, 128, 64), lr=5e-5, weight_decay=1e-4):
        self.net = Mlp(MlpSpec(TRANSITION_DIM, hidden, 1), rng=rng)
        self.opt = Adam(self.net.parameters, lr=lr,
                        weight_decay=weight_decay)

    def scores(self, x_normalized):
        """Raw scores, (N,), no graph."""
        with no_grad():
            return self.net.forward_np(x_normalized)[:, 0]

    def _loss_graph(self, demo_batch, policy_batch):
        x_demo = Tensor(demo_batch, requires_grad=True)
        d_demo = self.net(x_demo)
        d_policy = self.net(Tensor(policy_batch))
        # Input-gradient of the summed scores equals the per-sample
        # gradients stacked, since each score sees only its own row.
        gx = T.grad(T.sum_(d_demo), x_demo, create_graph=True)
        grad_sq = T.sum_(T.square(gx), axis=1)
        return lsgan_loss(d_demo, d_policy, grad_sq)

    def update(self, demo_batch, policy_batch):
        """One minibatch step. Returns (loss, demo_acc, policy_acc)."""
        loss = self._loss_graph(demo_batch, policy_batch)
        if not np.isfinite(loss.data):
            raise NumericError(
                f"discriminator loss is {loss.data!r}; parameters untouched")
        self.net.zero_grad()
        T.backward(loss)
        self.opt.step()
        with no_grad():
            demo_acc = float(np.mean(
                self.net.forward_np(demo_batch)[:, 0] > 0.0))
            policy_acc = float(np.mean(
                self.net.forward_np(policy_batch)[:, 0] < 0.0))
        return float(loss.data), demo_acc, policy_acc

    def update_epoch(self, demo_set, replay, rollout_transitions, rng):
        """One pass for a training iteration.

        Pushes the rollout into the replay, then runs a fixed number of
        minibatches whose policy half mixes fresh rollout transitions
        with uniformly sampled replay history. Returns mean metrics.
        """
        rollout = np.asarray(rollout_transitions, dtype=np.float64)
        if rollout.ndim != 2 or rollout.shape[0] == 0:
            raise StateError("discriminator update needs a non-empty rollout")
        replay.push(rollout)
        totals = np.zeros(3)
        half = MINIBATCH // 2
        for _ in range(MINIBATCHES_PER_EPOCH):
            demo_batch = demo_set.sample_normalized(MINIBATCH, rng)
            fresh = rollout[rng.integers(0, rollout.shape[0], size=half)]
            stale = replay.sample(MINIBATCH - half, rng)
            policy_batch = demo_set.normalize(np.concatenate([fresh, stale]))
            totals += self.update(demo_batch, policy_batch)
        return tuple(totals / MINIBATCHES_PER_EPOCH)

    def state_arrays(self):
        return self.net.state_arrays() + self.opt.state_arrays()

    def load_state_arrays(self, arrays):
        self.net.load_state_arrays(arrays)
        self.opt.load_state_arrays(arrays)
