"""Generalized advantage estimation over (time, env) reward arrays."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeError


def compute_gae(rewards, values, final_values, dones, discount, decay):
    """Backward advantage recursion.

    rewards, values, dones: (T, N). final_values: (N,) values of the
    observation after the last step, used as the rollout-boundary
    bootstrap. dones cut the recursion and zero the bootstrap, so any
    truncation bootstrap must already be folded into that step's
    reward. Returns (advantages, returns), both (T, N); returns are
    advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ShapeError(f"mismatched rollout shapes {rewards.shape} / "
                         f"{values.shape} / {dones.shape}")
    horizon = rewards.shape[0]
    adv = np.zeros_like(rewards)
    next_values = np.asarray(final_values, dtype=np.float64)
    carry = np.zeros(rewards.shape[1])
    for t in range(horizon - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + discount * next_values * live - values[t]
        carry = delta + discount * decay * live * carry
        adv[t] = carry
        next_values = values[t]
    if not np.all(np.isfinite(adv)):
        raise NumericError("non-finite advantage")
    return adv, adv + values


def normalize_advantages(adv):
    """Zero-mean, unit-std across the whole batch."""
    flat = adv - adv.mean()
    std = flat.std()
    if std > 0.0:
        flat = flat / std
    return flat
