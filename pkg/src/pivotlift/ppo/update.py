"""Clipped-surrogate optimization phase over one collected batch."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from ..nn import tensor as T
from ..nn.tensor import Tensor
from .config import adapt_learning_rate


def surrogate_objective(ratio, advantages, clip_range):
    """Graph tensor of per-sample clipped objective terms."""
    adv = Tensor(advantages)
    unclipped = ratio * adv
    clipped = T.clip(ratio, 1.0 - clip_range, 1.0 + clip_range) * adv
    return T.minimum(unclipped, clipped)


def approx_kl_k3(ratio):
    """Low-variance divergence estimate from importance ratios."""
    r = np.asarray(ratio, dtype=np.float64)
    return float(np.mean((r - 1.0) - np.log(r)))


def ppo_update(policy, value_net, policy_opt, value_opt, data, cfg, rng):
    """Run the epoch/minibatch sweep, adapting the step size from the
    measured divergence after every minibatch. Raises NumericError on a
    non-finite loss with the current minibatch untouched; the caller
    owns parameter snapshots.
    """
    n = data["obs"].shape[0]
    n_minibatches = n // cfg.minibatch_size
    kls, clip_fracs, pi_losses, v_losses = [], [], [], []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_kls = []
        for k in range(n_minibatches):
            idx = order[k * cfg.minibatch_size:(k + 1) * cfg.minibatch_size]
            obs = data["obs"][idx]
            logp_new = policy.log_prob(obs, data["actions"][idx])
            ratio = T.exp(logp_new - Tensor(data["log_probs"][idx]))
            surr = surrogate_objective(ratio, data["advantages"][idx],
                                       cfg.clip_range)
            pi_loss = -T.mean(surr)
            if cfg.entropy_coef != 0.0:
                pi_loss = pi_loss - cfg.entropy_coef * policy.entropy()
            v_pred = value_net.values_graph(obs)
            v_loss = T.mean(T.square(v_pred - Tensor(data["returns"][idx])))
            if not (np.isfinite(pi_loss.data) and np.isfinite(v_loss.data)):
                raise NumericError(
                    f"non-finite update loss (policy {pi_loss.data!r}, "
                    f"value {v_loss.data!r})")

            for p in policy.parameters:
                p.grad = None
            for p in value_net.parameters:
                p.grad = None
            T.backward(pi_loss)
            T.backward(cfg.value_coef * v_loss if cfg.value_coef != 1.0
                       else v_loss)
            policy_opt.step()
            value_opt.step()
            policy.clamp_log_std()

            kl = approx_kl_k3(ratio.data)
            epoch_kls.append(kl)
            kls.append(kl)
            clip_fracs.append(
                float(np.mean(np.abs(ratio.data - 1.0) > cfg.clip_range)))
            pi_losses.append(float(pi_loss.data))
            v_losses.append(float(v_loss.data))
        # adapting once per epoch keeps the rate from compounding
        # through every minibatch of a sweep
        lr = adapt_learning_rate(policy_opt.lr, float(np.mean(epoch_kls)),
                                 cfg.kl_target, cfg.lr_bounds)
        policy_opt.lr = lr
        value_opt.lr = lr
    return {
        "policy_loss": float(np.mean(pi_losses)),
        "value_loss": float(np.mean(v_losses)),
        "approx_kl": float(np.mean(kls)),
        "clip_fraction": float(np.mean(clip_fracs)),
        "lr": policy_opt.lr,
    }
