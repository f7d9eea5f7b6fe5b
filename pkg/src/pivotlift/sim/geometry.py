"""Kinematics and signed-distance geometry, batched over environments.

Configurations are 7-vectors: four arm joint angles (shoulder-absolute,
elbow-relative, arm 0 then arm 1) followed by the box pose (x, z, theta).
Batched arrays have the batch as the leading axis.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

NQ = 7  # 4 arm joints + 3 box dof
NC = 10  # contact pairs: 2 fingertip-box, 4 box-table, 4 box-wall

# box-frame corner order: (+,+), (-,+), (-,-), (+,-)
CORNER_SIGNS = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def wrap_angle(theta):
    """Wrap to (-pi, pi]. In-range values pass through bit-identically."""
    t = np.asarray(theta, dtype=np.float64)
    wrapped = -(np.mod(-t + np.pi, 2.0 * np.pi) - np.pi)
    return np.where((t > -np.pi) & (t <= np.pi), t, wrapped)


def fingertips(q_a, params):
    """Fingertip centers for both arms. q_a: (B, 4) -> (B, 2, 2)."""
    q_a = np.asarray(q_a, dtype=np.float64)
    if q_a.ndim == 1:
        return fingertips(q_a[None], params)[0]
    l1, l2 = params.link_lengths
    out = np.empty((q_a.shape[0], 2, 2))
    for arm in range(2):
        sx, sz = params.shoulders[arm]
        t1 = q_a[:, 2 * arm]
        t12 = t1 + q_a[:, 2 * arm + 1]
        out[:, arm, 0] = sx + l1 * np.cos(t1) + l2 * np.cos(t12)
        out[:, arm, 1] = sz + l1 * np.sin(t1) + l2 * np.sin(t12)
    return out


def arm_jacobians(q_a, params):
    """Fingertip Jacobians d(tip)/d(joints). q_a: (B, 4) -> (B, 2, 2, 2),
    indexed [batch, arm, xz, joint]."""
    q_a = np.asarray(q_a, dtype=np.float64)
    if q_a.ndim == 1:
        return arm_jacobians(q_a[None], params)[0]
    l1, l2 = params.link_lengths
    J = np.empty((q_a.shape[0], 2, 2, 2))
    for arm in range(2):
        t1 = q_a[:, 2 * arm]
        t12 = t1 + q_a[:, 2 * arm + 1]
        s1, c1 = np.sin(t1), np.cos(t1)
        s12, c12 = np.sin(t12), np.cos(t12)
        J[:, arm, 0, 0] = -l1 * s1 - l2 * s12
        J[:, arm, 0, 1] = -l2 * s12
        J[:, arm, 1, 0] = l1 * c1 + l2 * c12
        J[:, arm, 1, 1] = l2 * c12
    return J


def inverse_kinematics(target, arm, params, q_ref=(0.0, 0.0)):
    """Joint angles placing the fingertip center at `target` (world frame).

    Returns (q1, q2) closest to q_ref among the two elbow branches, or
    None when the point is out of reach.
    """
    l1, l2 = params.link_lengths
    sx, sz = params.shoulders[arm]
    px, pz = float(target[0]) - sx, float(target[1]) - sz
    r2 = px * px + pz * pz
    r = np.sqrt(r2)
    if r > l1 + l2 or r < abs(l1 - l2) or r == 0.0:
        return None
    c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    c2 = min(1.0, max(-1.0, c2))
    best = None
    best_d = np.inf
    base = np.arctan2(pz, px)
    for sign in (1.0, -1.0):
        q2 = sign * np.arccos(c2)
        q1 = base - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
        d = abs(wrap_angle(q1 - q_ref[0])) + abs(wrap_angle(q2 - q_ref[1]))
        if d < best_d:
            best_d = d
            best = (float(q1), float(q2))
    return best


def box_sdf(points, hx, hz):
    """Signed distance and outward normal of an axis-aligned box, box frame.

    points: (..., 2); hx, hz broadcastable against points[..., 0].
    Returns (phi, normal) with normal unit length everywhere (interior
    normal points along the axis of shallowest escape; ties go to x).
    """
    p = np.asarray(points, dtype=np.float64)
    px, pz = p[..., 0], p[..., 1]
    qx = np.abs(px) - hx
    qz = np.abs(pz) - hz
    ox = np.maximum(qx, 0.0)
    oz = np.maximum(qz, 0.0)
    outside = np.hypot(ox, oz)
    inside = np.minimum(np.maximum(qx, qz), 0.0)
    phi = outside + inside

    sx = np.where(px >= 0.0, 1.0, -1.0)
    sz = np.where(pz >= 0.0, 1.0, -1.0)
    n = np.empty(np.broadcast(px, pz).shape + (2,))
    safe = np.where(outside > 0.0, outside, 1.0)
    n[..., 0] = np.where(outside > 0.0, sx * ox / safe, np.where(qx >= qz, sx, 0.0))
    n[..., 1] = np.where(outside > 0.0, sz * oz / safe, np.where(qx >= qz, 0.0, sz))
    return phi, n


def box_corners(q_u, hx, hz):
    """World-frame corner positions. q_u: (B, 3) -> (B, 4, 2)."""
    q_u = np.asarray(q_u, dtype=np.float64)
    if q_u.ndim == 1:
        return box_corners(q_u[None], np.asarray(hx), np.asarray(hz))[0]
    c, s = np.cos(q_u[:, 2]), np.sin(q_u[:, 2])
    hx = np.broadcast_to(np.asarray(hx, dtype=np.float64), q_u.shape[:1])
    hz = np.broadcast_to(np.asarray(hz, dtype=np.float64), q_u.shape[:1])
    local_x = CORNER_SIGNS[None, :, 0] * hx[:, None]
    local_z = CORNER_SIGNS[None, :, 1] * hz[:, None]
    out = np.empty((q_u.shape[0], 4, 2))
    out[..., 0] = q_u[:, 0, None] + c[:, None] * local_x - s[:, None] * local_z
    out[..., 1] = q_u[:, 1, None] + s[:, None] * local_x + c[:, None] * local_z
    return out


def world_to_box(points, q_u):
    """Rotate/translate world points into the box frame. (B, ..., 2)."""
    p = np.asarray(points, dtype=np.float64)
    q_u = np.asarray(q_u, dtype=np.float64)
    c, s = np.cos(q_u[..., 2]), np.sin(q_u[..., 2])
    dx = p[..., 0] - q_u[..., 0]
    dz = p[..., 1] - q_u[..., 1]
    out = np.empty_like(p)
    out[..., 0] = c * dx + s * dz
    out[..., 1] = -s * dx + c * dz
    return out


def box_to_world_dir(dirs, q_u):
    """Rotate box-frame direction vectors into the world frame."""
    d = np.asarray(dirs, dtype=np.float64)
    q_u = np.asarray(q_u, dtype=np.float64)
    c, s = np.cos(q_u[..., 2]), np.sin(q_u[..., 2])
    out = np.empty_like(d)
    out[..., 0] = c * d[..., 0] - s * d[..., 1]
    out[..., 1] = s * d[..., 0] + c * d[..., 1]
    return out


def split_q(q):
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != NQ:
        raise ShapeError(f"configuration must have {NQ} entries, got {q.shape}")
    return q[..., :4], q[..., 4:]
