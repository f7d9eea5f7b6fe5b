"""Second-order dynamics: batched semi-implicit Euler with substepping.

Used for policy rollout and evaluation. The quasi-dynamic planner model
lives in quasidynamic.py; both share the contact layer.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from . import geometry as geo
from .contacts import contact_forces


def actuation_torque(q, v, a, bp):
    """Stiffness controller toward commanded joint positions, with
    viscous joint damping. Arm rows only; box rows zero."""
    q_a = q[:, :4]
    v_a = v[:, :4]
    return bp.joint_stiffness * (np.asarray(a) - q_a) - bp.joint_damping * v_a


def gravity_torque(q, bp):
    """Arms are gravity-compensated; gravity loads only the box."""
    tau = np.zeros((q.shape[0], geo.NQ))
    tau[:, 5] = -bp.box_mass * bp.gravity
    return tau


def mass_diagonal(bp, batch):
    m = np.empty((batch, geo.NQ))
    m[:, :4] = bp.arm_inertia
    m[:, 4] = bp.box_mass
    m[:, 5] = bp.box_mass
    m[:, 6] = bp.box_inertia
    return m


def dynamic_substep(q, v, a, bp, h):
    tau = gravity_torque(q, bp)
    tau[:, :4] += actuation_torque(q, v, a, bp)
    tau_c, _ = contact_forces(q, v, bp, bp.smoothing_sim, dynamic=True, h=h)
    tau += tau_c
    v_new = v + h * tau / mass_diagonal(bp, q.shape[0])
    q_new = q + h * v_new
    q_new[:, 6] = geo.wrap_angle(q_new[:, 6])
    return q_new, v_new


def dynamic_step(q, v, a, bp, h=None, substeps=None):
    """One frame: `substeps` semi-implicit Euler substeps spanning h.

    q, v: (B, 7); a: (B, 4) joint position commands. Returns new (q, v).
    """
    q = np.array(q, dtype=np.float64)
    v = np.array(v, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if h is None:
        h = bp.dynamic_step
    if substeps is None:
        substeps = bp.substeps
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    hs = h / substeps
    for _ in range(substeps):
        q, v = dynamic_substep(q, v, a, bp, hs)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
        raise NumericError("non-finite state after dynamic step")
    return q, v


def settle(q, v, a, bp, max_time=2.0, vel_tol=1e-3):
    """Integrate until the speed norm drops below vel_tol (or time out).

    Returns (q, v, settled_time or None).
    """
    h = bp.dynamic_step
    t = 0.0
    while t < max_time:
        q, v = dynamic_step(q, v, a, bp)
        t += h
        if np.all(np.abs(v) <= vel_tol):
            return q, v, t
    return q, v, None


def resting_height(theta, bp, batch_index=None, s=None):
    """Box center height at static equilibrium on the table.

    At theta ~ 0 the two bottom corners share the weight; the softplus
    tail carries it at a small positive gap
    phi_eq = -s * ln(exp(m g / (2 k_c s)) - 1). The equilibrium depends
    on the smoothing width, so pass the s actually simulated with.
    """
    if s is None:
        s = bp.smoothing_sim
    if batch_index is None:
        m, g, hx, hz = bp.box_mass, bp.gravity, bp.hx, bp.hz
    else:
        i = batch_index
        m, g, hx, hz = bp.box_mass[i], bp.gravity[i], bp.hx[i], bp.hz[i]
    load = m * g / (2.0 * bp.contact_stiffness * s)
    phi_eq = -s * np.log(np.expm1(load))
    return hx * np.abs(np.sin(theta)) + hz * np.cos(theta) + phi_eq
