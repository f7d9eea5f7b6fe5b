"""Physical parameters of the planar world and the scene file format.

The world is a vertical x-z plane: table surface along z=0, torso wall
along x=0, one free rectangular box, and two position-commanded 2-link
arms mounted on the wall. One scene file is shared by planner, trainer,
and evaluator so they all simulate identical physics.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from ..errors import ConfigError


@dataclass(frozen=True)
class WorldParams:
    gravity: float = 9.81
    half_extents: tuple = (0.205, 0.13)
    box_mass: float = 0.45
    friction: float = 1.0
    fingertip_radius: float = 0.02
    link_lengths: tuple = (0.30, 0.30)
    shoulders: tuple = ((0.0, 0.55), (0.0, 0.35))
    joint_stiffness: float = 50.0
    joint_damping: float = 2.0
    contact_stiffness: float = 1.0e4
    smoothing_sim: float = 1.0e-3
    smoothing_planner: float = 5.0e-3
    friction_vel_scale: float = 1.0e-3
    # dynamic-mode stabilization (absent from the quasi-dynamic model)
    arm_inertia: float = 0.05
    normal_damping: float = 50.0
    friction_cap: float = 0.5
    # quasi-dynamic first-order damping matrix entries
    qd_box_damping: tuple = (10.0, 10.0, 0.5)
    qd_step: float = 0.1
    # dynamic integration
    dynamic_step: float = 1.0 / 60.0
    substeps: int = 10

    def __post_init__(self):
        # gravity may be zero (equilibrium tests); everything else > 0
        if self.gravity < 0.0:
            raise ConfigError(f"gravity must be >= 0, got {self.gravity}")
        pos = {
            "box_mass": self.box_mass,
            "fingertip_radius": self.fingertip_radius,
            "joint_stiffness": self.joint_stiffness,
            "joint_damping": self.joint_damping,
            "contact_stiffness": self.contact_stiffness,
            "smoothing_sim": self.smoothing_sim,
            "smoothing_planner": self.smoothing_planner,
            "friction_vel_scale": self.friction_vel_scale,
            "arm_inertia": self.arm_inertia,
            "qd_step": self.qd_step, "dynamic_step": self.dynamic_step,
        }
        for name, val in pos.items():
            if not (val > 0.0):
                raise ConfigError(f"{name} must be positive, got {val}")
        if not (0.0 < self.friction <= 2.0):
            raise ConfigError(f"friction must be in (0, 2], got {self.friction}")
        if any(h <= 0 for h in self.half_extents):
            raise ConfigError(f"half_extents must be positive: {self.half_extents}")
        if any(l <= 0 for l in self.link_lengths):
            raise ConfigError(f"link_lengths must be positive: {self.link_lengths}")
        if self.substeps < 1:
            raise ConfigError(f"substeps must be >= 1, got {self.substeps}")
        object.__setattr__(self, "half_extents", tuple(float(h) for h in self.half_extents))
        object.__setattr__(self, "link_lengths", tuple(float(l) for l in self.link_lengths))
        object.__setattr__(self, "qd_box_damping",
                           tuple(float(d) for d in self.qd_box_damping))
        object.__setattr__(
            self, "shoulders",
            tuple(tuple(float(c) for c in s) for s in self.shoulders))

    @property
    def box_inertia(self):
        hx, hz = self.half_extents
        return self.box_mass * ((2 * hx) ** 2 + (2 * hz) ** 2) / 12.0


def save_scene(path, params):
    with open(path, "w") as fh:
        yaml.safe_dump(_to_plain(asdict(params)), fh, sort_keys=True)


def load_scene(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid scene file: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: scene file must be a mapping")
    known = {f.name for f in fields(WorldParams)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown scene keys {sorted(unknown)}")
    try:
        return WorldParams(**raw)
    except TypeError as e:
        raise ConfigError(f"{path}: bad scene value: {e}")


def scene_hash(params):
    """Stable short hash of the full parameter set, echoed into outputs."""
    text = yaml.safe_dump(_to_plain(asdict(params)), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _to_plain(obj):
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class BatchParams:
    """Per-environment physical parameters as (B,) arrays.

    Domain randomization perturbs the array fields; everything else is
    shared scalars taken from the nominal WorldParams.
    """

    ARRAY_FIELDS = ("gravity", "hx", "hz", "box_mass", "friction")

    def __init__(self, nominal, batch):
        self.nominal = nominal
        self.batch = int(batch)
        b = self.batch
        self.gravity = np.full(b, nominal.gravity)
        self.hx = np.full(b, nominal.half_extents[0])
        self.hz = np.full(b, nominal.half_extents[1])
        self.box_mass = np.full(b, nominal.box_mass)
        self.friction = np.full(b, nominal.friction)

    @property
    def box_inertia(self):
        return self.box_mass * ((2 * self.hx) ** 2 + (2 * self.hz) ** 2) / 12.0

    def __getattr__(self, name):
        # scalar fields fall through to the nominal parameters
        return getattr(self.nominal, name)
