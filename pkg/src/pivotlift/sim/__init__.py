"""Planar contact world: geometry, smoothed contact, two step models."""

from . import contacts, engine, geometry
from .contacts import contact_forces, contact_geometry, smoothed_normal_force
from .engine import dynamic_step, resting_height, settle
from .geometry import fingertips, inverse_kinematics, wrap_angle
from .params import BatchParams, WorldParams, load_scene, save_scene, scene_hash
from .quasidynamic import quasi_dynamic_step

__all__ = [
    "contacts", "engine", "geometry",
    "WorldParams", "BatchParams", "load_scene", "save_scene", "scene_hash",
    "contact_forces", "contact_geometry", "smoothed_normal_force",
    "dynamic_step", "settle", "resting_height",
    "quasi_dynamic_step", "fingertips", "inverse_kinematics", "wrap_angle",
]
