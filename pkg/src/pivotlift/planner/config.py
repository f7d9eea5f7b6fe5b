"""Planner configuration.

Everything the tree search needs beyond the physical scene: sampling
bounds, goal bias, push shaping, and the success thresholds shared with
evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class PlannerConfig:
    # goal bias and metric
    p_goal: float = 0.2
    weight_xy: float = 1.0
    weight_theta: float = 0.1  # m^2 per rad^2; 1 rad counts like 0.32 m

    # box-pose sampling bounds: (x, z, theta)
    bounds_lo: tuple = (0.05, 0.05, -np.pi)
    bounds_hi: tuple = (0.55, 0.50, np.pi)

    # extension shaping
    push_steps: int = 10
    standoff_clearance: float = 1.5  # in units of fingertip radius
    press_depth: float = 0.012  # command depth past the face, meters
    push_translation: float = 0.06  # max targeted box travel per extension
    push_rotation: float = 0.3  # max targeted box turn per extension, rad
    face_offset_max: float = 0.85  # contact point range along a face

    # success thresholds, shared with the evaluation protocol
    success_trans: float = 0.05
    success_rot: float = 0.2

    # refinement
    shortcut_attempts: int = 60
    shortcut_span: int = 12  # longest row window a shortcut may bridge
    shortcut_tol: float = 1e-6  # metric slack when validating a shortcut
    control_period: float = 1.0 / 15.0
    # Spans slow enough that a regrasp sweep shoves the box instead of
    # burying it in the table; the sweep still clips the box, which is the
    # gap closed-loop training is supposed to absorb.
    teleport_duration: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.p_goal <= 1.0:
            raise ConfigError(f"p_goal must be in [0, 1], got {self.p_goal}")
        if self.push_steps < 1:
            raise ConfigError("push_steps must be >= 1")
        for name in ("weight_xy", "weight_theta", "standoff_clearance",
                     "press_depth", "push_translation", "push_rotation",
                     "success_trans", "success_rot", "control_period",
                     "teleport_duration"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.face_offset_max <= 1.0:
            raise ConfigError("face_offset_max must be in (0, 1]")
        lo, hi = self.bounds_lo, self.bounds_hi
        if len(lo) != 3 or len(hi) != 3 or any(
                l >= h for l, h in zip(lo, hi)):
            raise ConfigError(f"bad workspace bounds: {lo}, {hi}")
        object.__setattr__(self, "bounds_lo",
                           tuple(float(v) for v in lo))
        object.__setattr__(self, "bounds_hi",
                           tuple(float(v) for v in hi))
