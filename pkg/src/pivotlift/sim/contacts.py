"""Smoothed contact model shared by both simulation modes.

Ten pairs in fixed order: arm-0 fingertip vs box, arm-1 fingertip vs
box, four box corners vs table, the same four corners vs wall. Corner
order follows geometry.CORNER_SIGNS. Normal force is the softplus law
f = k_c * s * ln(1 + exp(-phi/s)); friction is regularized Coulomb
f_t = -mu * f_n * tanh(v_t / eps_v).
"""

from __future__ import annotations

import numpy as np

from . import geometry as geo


def smoothed_normal_force(phi, k_c, s):
    """Softplus normal force; positive everywhere, C1, decreasing in phi."""
    phi = np.asarray(phi, dtype=np.float64)
    return k_c * s * np.logaddexp(0.0, -phi / s)


def normal_force_slope(phi, k_c, s):
    """d f / d phi = -k_c * sigmoid(-phi/s), written tanh-stable."""
    phi = np.asarray(phi, dtype=np.float64)
    return -k_c * 0.5 * (1.0 + np.tanh(-phi / (2.0 * s)))


def contact_activation(phi, s):
    """sigmoid(-phi/s) in [0,1]: how engaged a pair is; gates damping."""
    return 0.5 * (1.0 + np.tanh(-np.asarray(phi) / (2.0 * s)))


def contact_geometry(q, bp):
    """Geometry of all pairs for configurations q: (B, 7).

    Returns dict with
      phi:    (B, 10) signed distances
      point:  (B, 10, 2) world contact points (box-surface point for
              fingertip pairs, corner position for plane pairs)
      normal: (B, 10, 2) world unit normals, pointing at the body the
              positive force acts on (fingertip / box respectively)
      tips:   (B, 2, 2) fingertip centers
    """
    q = np.asarray(q, dtype=np.float64)
    q_a, q_u = geo.split_q(q)
    B = q.shape[0]
    phi = np.empty((B, geo.NC))
    point = np.empty((B, geo.NC, 2))
    normal = np.empty((B, geo.NC, 2))

    tips = geo.fingertips(q_a, bp)
    tips_box = geo.world_to_box(tips, q_u[:, None, :])
    d_box, n_box = geo.box_sdf(tips_box, bp.hx[:, None], bp.hz[:, None])
    n_world = geo.box_to_world_dir(n_box, q_u[:, None, :])
    phi[:, 0:2] = d_box - bp.fingertip_radius
    normal[:, 0:2] = n_world
    # force is applied where the fingertip meets the box surface
    point[:, 0:2] = tips - n_world * d_box[..., None]

    corners = geo.box_corners(q_u, bp.hx, bp.hz)
    phi[:, 2:6] = corners[..., 1]  # table: gap is the z coordinate
    point[:, 2:6] = corners
    normal[:, 2:6] = np.array([0.0, 1.0])
    phi[:, 6:10] = corners[..., 0]  # wall: gap is the x coordinate
    point[:, 6:10] = corners
    normal[:, 6:10] = np.array([1.0, 0.0])
    return {"phi": phi, "point": point, "normal": normal, "tips": tips}


def contact_velocities(q, v, cg, bp):
    """Normal/tangential relative velocity per pair: (B, 10) each.

    Relative velocity is taken on the body the normal points at, minus
    the other body, so positive v_n means separating.
    """
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    q_a, q_u = geo.split_q(q)
    v_a, v_u = v[:, :4], v[:, 4:]
    B = q.shape[0]

    # box-point velocity at every contact point
    r = cg["point"] - q_u[:, None, 0:2]
    omega = v_u[:, 2:3]
    v_box_pt = np.empty((B, geo.NC, 2))
    v_box_pt[..., 0] = v_u[:, 0:1] - omega * r[..., 1]
    v_box_pt[..., 1] = v_u[:, 1:2] + omega * r[..., 0]

    J = geo.arm_jacobians(q_a, bp)
    v_tip = np.einsum("baij,baj->bai", J, v_a.reshape(B, 2, 2))

    v_rel = np.empty((B, geo.NC, 2))
    v_rel[:, 0:2] = v_tip - v_box_pt[:, 0:2]
    v_rel[:, 2:10] = v_box_pt[:, 2:10]

    n = cg["normal"]
    t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    v_n = np.einsum("bci,bci->bc", v_rel, n)
    v_t = np.einsum("bci,bci->bc", v_rel, t)
    return v_n, v_t, t


def contact_forces(q, v, bp, s, dynamic=False, h=None):
    """Generalized contact force tau: (B, 7), plus per-pair diagnostics.

    Quasi-dynamic mode (dynamic=False) is the pure model: softplus
    normal force plus tanh friction. Dynamic mode adds proximity-gated
    normal damping and a per-contact friction force cap so the stiff
    model settles under explicit substepping; h is the substep then.
    """
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    B = q.shape[0]
    q_a, q_u = geo.split_q(q)
    cg = contact_geometry(q, bp)
    v_n, v_t, t = contact_velocities(q, v, cg, bp)
    phi = cg["phi"]
    n = cg["normal"]

    f_n = smoothed_normal_force(phi, bp.contact_stiffness, s)
    if dynamic:
        act = contact_activation(phi, s)
        f_n = np.maximum(0.0, f_n - bp.normal_damping * act * v_n)

    J = geo.arm_jacobians(q_a, bp)
    r = cg["point"] - q_u[:, None, 0:2]

    f_t = -bp.friction[:, None] * f_n * np.tanh(v_t / bp.friction_vel_scale)
    if dynamic:
        if h is None:
            raise ValueError("dynamic contact forces need the substep h")
        w_t = _tangential_effective_inverse_mass(J, r, t, bp)
        cap = bp.friction_cap * np.abs(v_t) / (h * w_t)
        f_t = np.clip(f_t, -cap, cap)

    force = n * f_n[..., None] + t * f_t[..., None]

    tau = np.zeros((B, geo.NQ))
    # fingertip pairs push the arm tips; reaction acts on the box
    for arm in range(2):
        f_arm = force[:, arm]
        tau[:, 2 * arm:2 * arm + 2] += np.einsum("bij,bi->bj", J[:, arm], f_arm)
    box_force = np.concatenate([-force[:, 0:2], force[:, 2:10]], axis=1)
    tau[:, 4] += box_force[..., 0].sum(axis=1)
    tau[:, 5] += box_force[..., 1].sum(axis=1)
    tau[:, 6] += (r[..., 0] * box_force[..., 1]
                  - r[..., 1] * box_force[..., 0]).sum(axis=1)
    diag = {"phi": phi, "f_n": f_n, "f_t": f_t, "v_n": v_n, "v_t": v_t,
            "point": cg["point"], "normal": n, "tips": cg["tips"]}
    return tau, diag


def _tangential_effective_inverse_mass(J, r, t, bp):
    """w = j_t M^-1 j_t^T per contact: how fast a unit tangential force
    changes v_t. Used only for the dynamic-mode friction cap.

    J: (B, 2, 2, 2) arm Jacobians; r: (B, 10, 2) levers from box center;
    t: (B, 10, 2) unit tangents.
    """
    j_theta = r[..., 0] * t[..., 1] - r[..., 1] * t[..., 0]
    w = 1.0 / bp.box_mass[:, None] + j_theta ** 2 / bp.box_inertia[:, None]
    # fingertip pairs also accelerate the arm joints
    jt_arm = np.einsum("baij,bai->baj", J, t[:, 0:2])
    w[:, 0:2] += (jt_arm ** 2).sum(axis=-1) / bp.arm_inertia
    return w
