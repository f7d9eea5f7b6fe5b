"""Discriminator observations: consecutive joint-position pairs.

A transition is the 8-vector (q_a_t ‖ q_a_{t+1}) at the policy control
period. Normalization statistics come from the demonstration set and
are frozen when it is built, so the discriminator's target distribution
never drifts.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError, StateError

TRANSITION_DIM = 8
STD_FLOOR = 1e-6


def pair_transitions(q_a_sequence):
    """(T, 4) joint trajectory -> (T-1, 8) stacked consecutive pairs."""
    q = np.asarray(q_a_sequence, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != 4:
        raise ShapeError(f"expected a (T, 4) joint sequence, got {q.shape}")
    if q.shape[0] < 2:
        raise ShapeError("need at least two steps to form a transition")
    return np.concatenate([q[:-1], q[1:]], axis=1)


class DemoTransitionSet:
    """Demonstration transitions plus their frozen normalization."""

    def __init__(self, q_a_sequence):
        self.transitions = pair_transitions(q_a_sequence)
        self.mean = self.transitions.mean(axis=0)
        self.std = np.maximum(self.transitions.std(axis=0), STD_FLOOR)

    def __len__(self):
        return self.transitions.shape[0]

    def normalize(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != TRANSITION_DIM:
            raise ShapeError(f"transitions have {TRANSITION_DIM} dims, "
                             f"got {x.shape}")
        return (x - self.mean) / self.std

    def sample_normalized(self, n, rng):
        idx = rng.integers(0, len(self), size=n)
        return self.normalize(self.transitions[idx])


class TransitionReplay:
    """Fixed-capacity ring buffer of raw policy transitions."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ConfigError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.buf = np.empty((self.capacity, TRANSITION_DIM))
        self.size = 0
        self.head = 0

    def __len__(self):
        return self.size

    def push(self, transitions):
        x = np.asarray(transitions, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != TRANSITION_DIM:
            raise ShapeError(f"expected (N, {TRANSITION_DIM}), got {x.shape}")
        for row in x if x.shape[0] <= self.capacity else x[-self.capacity:]:
            self.buf[self.head] = row
            self.head = (self.head + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        if self.size == 0:
            raise StateError("sampling from an empty replay buffer")
        idx = rng.integers(0, self.size, size=n)
        return self.buf[idx].copy()
