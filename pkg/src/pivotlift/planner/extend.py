"""Tree extension: sampled regrasp plus a held push.

An extension teleports both fingertips to sampled standoff points
around the box (a regrasp edge, box pose frozen), then holds a single
joint command for a fixed number of quasi-dynamic steps. The command
places each tip slightly inside the face it should push, displaced the
way the box ought to travel, so the stiffness controller transmits the
push while the implicit solver resolves stick, slide, and separation.
"""

from __future__ import annotations

import numpy as np

from ..errors import SolverError
from ..sim import geometry as geo
from ..sim.quasidynamic import quasi_dynamic_step

# graspable faces in box frame: (anchor axis, sign) for left, top,
# bottom; the +x face is reserved for the torso side and never grasped
_FACES = ((0, -1.0), (1, 1.0), (1, -1.0))


def _face_point(face, offset, hx, hz):
    """Contact point and outward normal in the box frame."""
    axis, sign = _FACES[face]
    if axis == 0:
        return np.array([sign * hx, offset * hz]), np.array([sign, 0.0])
    return np.array([offset * hx, sign * hz]), np.array([0.0, sign])


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def sample_contact_assignment(rng, cfg):
    """Per-arm (face, offset) draws; fixed draw order for determinism."""
    out = []
    for _ in range(2):
        face = int(rng.integers(len(_FACES)))
        offset = float(rng.uniform(-cfg.face_offset_max,
                                   cfg.face_offset_max))
        out.append((face, offset))
    return out


def extend(tree, node_id, subgoal, rng, world, cfg):
    """Try one regrasp-and-push extension from the given node.

    Returns (teleport config, push config, held command, push steps) or
    None when IK has no solution, a standoff would collide, or the
    implicit solve fails. Failures are expected and non-fatal.
    """
    node = tree.nodes[node_id]
    q = node.q
    q_u = q[4:]
    hx, hz = world.half_extents
    r_f = world.fingertip_radius
    assignment = sample_contact_assignment(rng, cfg)

    center = q_u[:2]
    R_now = _rot(q_u[2])
    standoff_dist = r_f * (1.0 + cfg.standoff_clearance)

    # clipped box displacement this push aims for
    dxy = np.asarray(subgoal[:2]) - center
    n = np.linalg.norm(dxy)
    if n > cfg.push_translation:
        dxy = dxy * (cfg.push_translation / n)
    dth = np.clip(geo.wrap_angle(subgoal[2] - q_u[2]),
                  -cfg.push_rotation, cfg.push_rotation)
    R_next = _rot(q_u[2] + dth)

    q_tele_a = np.empty(4)
    cmd = np.empty(4)
    for arm, (face, offset) in enumerate(assignment):
        p_local, n_local = _face_point(face, offset, hx, hz)
        # regrasp pose: tip center held off the current face
        standoff = center + R_now @ (p_local + n_local * standoff_dist)
        if standoff[0] < r_f or standoff[1] < r_f:
            return None  # inside wall or table
        sol = geo.inverse_kinematics(
            standoff, arm, world, q_ref=tuple(q[2 * arm:2 * arm + 2]))
        if sol is None:
            return None
        q_tele_a[2 * arm:2 * arm + 2] = sol
        # held command: tip pressed past the displaced face
        p_next = center + dxy + R_next @ (
            p_local + n_local * (r_f - cfg.press_depth))
        sol = geo.inverse_kinematics(p_next, arm, world, q_ref=sol)
        if sol is None:
            return None
        cmd[2 * arm:2 * arm + 2] = sol

    q_tele = q.copy()
    q_tele[:4] = q_tele_a

    q_push = q_tele
    try:
        for _ in range(cfg.push_steps):
            q_push = quasi_dynamic_step(q_push, cmd, params=world)
    except SolverError:
        return None
    if not np.all(np.isfinite(q_push)):
        return None
    return q_tele, q_push, cmd, cfg.push_steps
