"""Task configuration: goal, reward weights, terminations, randomization.

Everything here is config-file-overridable but defaults to the task's
canonical constants; runs echo the loaded values into their metadata.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from ..errors import ConfigError


@dataclass(frozen=True)
class RewardWeights:
    w_trans: float = 0.07
    w_rot: float = 0.03
    w_action: float = -0.002
    w_velocity: float = -0.002
    w_termination: float = -1.0


@dataclass(frozen=True)
class TaskGoal:
    x: float = 0.15
    z: float = 0.40
    theta: float = -np.pi / 2.0

    @property
    def q_u(self):
        return np.array([self.x, self.z, self.theta])


@dataclass(frozen=True)
class TerminationThresholds:
    center: tuple = (0.35, 0.13)
    radius: float = 1.0
    drop_z: float = -0.02

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ConfigError(f"termination radius must be positive: {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class RandomizationSpec:
    position_radius: float = 0.05
    theta_range: float = 0.05
    action_noise: float = 0.02
    gravity_disturbance: float = 0.5
    dim_scale: tuple = (0.9, 1.1)
    mass_scale: tuple = (0.8, 1.2)
    friction_scale: tuple = (0.8, 1.0)

    def __post_init__(self):
        for name in ("dim_scale", "mass_scale", "friction_scale"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi):
                raise ConfigError(f"{name} must satisfy 0 < lo <= hi: ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        for name in ("position_radius", "theta_range", "action_noise",
                     "gravity_disturbance"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")

    def zero_width(self):
        """Degenerate spec: every draw returns the nominal value."""
        return RandomizationSpec(
            position_radius=0.0, theta_range=0.0, action_noise=0.0,
            gravity_disturbance=0.0, dim_scale=(1.0, 1.0),
            mass_scale=(1.0, 1.0), friction_scale=(1.0, 1.0))


@dataclass(frozen=True)
class EnvConfig:
    goal: TaskGoal = field(default_factory=TaskGoal)
    weights: RewardWeights = field(default_factory=RewardWeights)
    termination: TerminationThresholds = field(default_factory=TerminationThresholds)
    randomization: RandomizationSpec = field(default_factory=RandomizationSpec)
    episode_length: int = 300
    action_scale: float = 0.05
    command_limit: float = 2.8
    velocity_rot_weight: float = 0.1
    nominal_start: tuple = (0.35, 0.13)
    home_targets: tuple = ((0.25, 0.48), (0.18, 0.40))

    def __post_init__(self):
        if self.episode_length < 1:
            raise ConfigError(f"episode_length must be >= 1: {self.episode_length}")
        if self.action_scale <= 0.0:
            raise ConfigError(f"action_scale must be positive: {self.action_scale}")
        object.__setattr__(self, "nominal_start",
                           tuple(float(c) for c in self.nominal_start))
        object.__setattr__(
            self, "home_targets",
            tuple(tuple(float(c) for c in t) for t in self.home_targets))


_SECTIONS = {
    "goal": TaskGoal,
    "weights": RewardWeights,
    "termination": TerminationThresholds,
    "randomization": RandomizationSpec,
}


def load_env_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid config: {e}")
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return env_config_from_dict(raw, where=str(path))


def env_config_from_dict(raw, where="env config"):
    known = {f.name for f in fields(EnvConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, val in raw.items():
        cls = _SECTIONS.get(key)
        if cls is not None:
            if not isinstance(val, dict):
                raise ConfigError(f"{where}: {key} must be a mapping")
            sub_known = {f.name for f in fields(cls)}
            sub_unknown = set(val) - sub_known
            if sub_unknown:
                raise ConfigError(
                    f"{where}: unknown {key} keys {sorted(sub_unknown)}")
            try:
                kwargs[key] = cls(**val)
            except TypeError as e:
                raise ConfigError(f"{where}: bad {key}: {e}")
        else:
            kwargs[key] = val
    try:
        return EnvConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}")


def save_env_config(path, cfg):
    with open(path, "w") as fh:
        yaml.safe_dump(_plain(asdict(cfg)), fh, sort_keys=True)


def env_config_hash(cfg):
    text = yaml.safe_dump(_plain(asdict(cfg)), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
