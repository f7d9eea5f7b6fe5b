"""Task reward and termination predicates, batched."""

from __future__ import annotations

import numpy as np

from ..sim import geometry as geo


def goal_distances(q_u, goal):
    """(d_trans, d_rot): planar Euclidean distance to the goal position
    and absolute wrapped angle error, elementwise over the batch."""
    q_u = np.asarray(q_u, dtype=np.float64)
    d_trans = np.hypot(q_u[..., 0] - goal.x, q_u[..., 1] - goal.z)
    d_rot = np.abs(geo.wrap_angle(q_u[..., 2] - goal.theta))
    return d_trans, d_rot


def task_reward(q_u, action, v_u, terminated, goal, weights,
                velocity_rot_weight=0.1):
    """r = w_t/(d_trans+0.1) + w_r/(d_rot+0.1) + w_a ||a||^2
        + w_v ||v_u||^2 + w_term [terminated]

    `action` is the commanded-position delta from the current joint
    angles (rad). The angular velocity component is down-weighted to
    keep the velocity penalty unit-consistent.
    """
    q_u = np.asarray(q_u, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    v_u = np.asarray(v_u, dtype=np.float64)
    d_trans, d_rot = goal_distances(q_u, goal)
    act_sq = np.sum(action * action, axis=-1)
    vel_sq = (v_u[..., 0] ** 2 + v_u[..., 1] ** 2
              + velocity_rot_weight * v_u[..., 2] ** 2)
    term = np.asarray(terminated, dtype=np.float64)
    return (weights.w_trans / (d_trans + 0.1)
            + weights.w_rot / (d_rot + 0.1)
            + weights.w_action * act_sq
            + weights.w_velocity * vel_sq
            + weights.w_termination * term)


def check_termination(q_u, hx, hz, thresholds):
    """True where the box has left the workable region: far from the
    table center, dropped below the table, or carried past the wall."""
    q_u = np.asarray(q_u, dtype=np.float64)
    if q_u.ndim == 1:
        return bool(check_termination(q_u[None], np.asarray(hx),
                                      np.asarray(hz), thresholds)[0])
    cx, cz = thresholds.center
    far = np.hypot(q_u[:, 0] - cx, q_u[:, 1] - cz) > thresholds.radius
    corners = geo.box_corners(q_u, hx, hz)
    dropped = corners[..., 1].min(axis=1) < thresholds.drop_z
    behind_wall = q_u[:, 0] < -np.broadcast_to(np.asarray(hx), q_u.shape[:1])
    return far | dropped | behind_wall
