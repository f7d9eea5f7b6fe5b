"""First-order implicit step used by the contact planner.

The configuration update solves
    D (q' - q) / h = tau_stiffness(q', a) + tau_gravity + tau_contact(q', (q'-q)/h)
for q' by damped Newton with a backtracking line search on the residual
norm. D is a constant diagonal damping matrix; friction sees the finite
velocity (q'-q)/h, so sticking and sliding both fall out of the root.
"""

from __future__ import annotations

import numpy as np

from ..errors import SolverError
from . import geometry as geo
from .contacts import contact_forces
from .params import BatchParams


def qd_damping(bp):
    d = np.empty(geo.NQ)
    d[:4] = bp.joint_damping
    d[4:] = np.asarray(bp.qd_box_damping)
    return d


def qd_residual(q_new, q_old, a, bp, s):
    """Residual of the implicit equation, batched: (B, 7)."""
    h = bp.qd_step
    v = (q_new - q_old) / h
    tau = np.zeros_like(q_new)
    tau[:, :4] = bp.joint_stiffness * (a - q_new[:, :4])
    tau[:, 5] -= bp.box_mass * bp.gravity
    tau_c, _ = contact_forces(q_new, v, bp, s, dynamic=False)
    tau += tau_c
    return qd_damping(bp)[None, :] * v - tau


def quasi_dynamic_step(q, a, bp=None, params=None, s=None, tol=1e-9,
                       max_iter=60, trace=None):
    """Advance one configuration by one implicit step.

    q: (7,) configuration; a: (4,) joint command. Either a BatchParams
    (batch 1) or a nominal WorldParams via `params` must be given.
    Returns the new configuration with theta wrapped.

    trace, if a list, receives the accepted residual norms (testing).
    """
    if bp is None:
        bp = BatchParams(params, 1)
    if s is None:
        s = bp.smoothing_planner
    q0 = np.array(q, dtype=np.float64).reshape(1, geo.NQ)
    a = np.asarray(a, dtype=np.float64).reshape(1, 4)

    qn = q0.copy()
    r = qd_residual(qn, q0, a, bp, s)[0]
    rn = float(np.linalg.norm(r))
    if trace is not None:
        trace.append(rn)
    for _ in range(max_iter):
        if rn <= tol:
            break
        J = _fd_jacobian(qn, q0, a, bp, s, r)
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise SolverError("singular Jacobian in quasi-dynamic solve",
                              residual_norm=rn)
        alpha = 1.0
        accepted = False
        while alpha > 1e-12:
            q_try = qn + alpha * delta[None, :]
            r_try = qd_residual(q_try, q0, a, bp, s)[0]
            rn_try = float(np.linalg.norm(r_try))
            if rn_try < rn:
                qn, r, rn = q_try, r_try, rn_try
                accepted = True
                if trace is not None:
                    trace.append(rn)
                break
            alpha *= 0.5
        if not accepted:
            # roundoff floor: accept if already essentially converged
            if rn <= 1e-7:
                break
            raise SolverError(
                f"line search stalled at residual {rn:.3e}",
                residual_norm=rn)
    else:
        if rn > tol and rn > 1e-7:
            raise SolverError(
                f"no convergence after {max_iter} iterations "
                f"(residual {rn:.3e})", residual_norm=rn)
    out = qn[0].copy()
    out[6] = geo.wrap_angle(out[6])
    return out


def _fd_jacobian(qn, q0, a, bp_single, s, r0):
    """Forward-difference Jacobian of the residual, one batched call."""
    n = geo.NQ
    eps = 1e-7 * (1.0 + np.abs(qn[0]))
    qs = np.repeat(qn, n, axis=0)
    qs[np.arange(n), np.arange(n)] += eps
    bpn = _expand(bp_single, n)
    rs = qd_residual(qs, np.repeat(q0, n, axis=0), np.repeat(a, n, axis=0),
                     bpn, s)
    return (rs - r0[None, :]).T / eps[None, :]


def _expand(bp, n):
    if bp.batch == n:
        return bp
    out = BatchParams(bp.nominal, n)
    for name in BatchParams.ARRAY_FIELDS:
        getattr(out, name)[:] = getattr(bp, name)[0]
    return out
