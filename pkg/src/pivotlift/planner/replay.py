"""Open-loop execution of a refined plan in the dynamic simulator.

The plan's robot rows are fed directly as stiffness commands, one row
per control period, with no feedback of any kind. Under randomization
this is the fragile baseline the trained policy is measured against.
"""

from __future__ import annotations

import numpy as np

from ..env.config import EnvConfig
from ..env.reward import check_termination, goal_distances, task_reward
from ..env.task import CONTROL_SUBSTEPS, VecTaskEnv
from ..sim import engine


def open_loop_replay(plan_t, world, env_cfg=None, randomize=False, seed=0,
                     hold_to=None, success_trans=0.05, success_rot=0.2):
    """Roll the plan out once; returns the evaluation metrics dict.

    randomize=True draws physics and initial pose from the training
    distribution (same streams as the environment); the plan itself is
    never adjusted. hold_to keeps the final command applied until that
    many control steps have elapsed, mirroring episode length. Success
    requires both distance thresholds met at the same checked state.
    """
    env_cfg = env_cfg if env_cfg is not None else EnvConfig()
    env = VecTaskEnv(world, env_cfg, batch=1, seed=seed,
                     randomize=randomize)
    env.reset_all()
    draws = {
        "gravity": float(env.bp.gravity[0]),
        "dim_scale": float(env.bp.hx[0] / world.half_extents[0]),
        "box_mass": float(env.bp.box_mass[0]),
        "friction": float(env.bp.friction[0]),
        "init_x": float(env.q[0, 4]),
        "init_z": float(env.q[0, 5]),
        "init_theta": float(env.q[0, 6]),
    }
    goal = env_cfg.goal
    steps = len(plan_t) if hold_to is None else max(len(plan_t), hold_to)

    def distances():
        d_trans, d_rot = goal_distances(env.q[:, 4:], goal)
        return float(d_trans[0]), float(d_rot[0])

    min_dt, min_dr = distances()
    success = min_dt <= success_trans and min_dr <= success_rot
    total_reward = 0.0
    dropped = False
    executed = 0
    h = world.dynamic_step
    for k in range(steps):
        row = plan_t.q_a[min(k, len(plan_t) - 1)]
        q_a_before = env.q[0, :4].copy()
        noise = env.rngs[0].normal(
            0.0, env_cfg.randomization.action_noise, size=4) \
            if randomize and env_cfg.randomization.action_noise > 0.0 \
            else 0.0
        env.cmd[0] = row
        applied = env.cmd + noise
        for _ in range(CONTROL_SUBSTEPS):
            env.q, env.v = engine.dynamic_step(
                env.q, env.v, applied, env.bp, h=h)
        executed = k + 1
        term = check_termination(env.q[:, 4:], env.bp.hx, env.bp.hz,
                                 env_cfg.termination)
        pen_action = env.cmd - q_a_before
        r = task_reward(env.q[:, 4:], pen_action, env.v[:, 4:], term,
                        goal, env_cfg.weights,
                        velocity_rot_weight=env_cfg.velocity_rot_weight)
        total_reward += float(r[0])
        dt_k, dr_k = distances()
        if dt_k <= success_trans and dr_k <= success_rot:
            success = True
        min_dt = min(min_dt, dt_k)
        min_dr = min(min_dr, dr_k)
        if term[0]:
            dropped = True
            break
    final_dt, final_dr = distances()
    return {
        "reward": total_reward,
        "min_d_trans": min_dt,
        "min_d_rot": min_dr,
        "final_d_trans": final_dt,
        "final_d_rot": final_dr,
        "success": bool(success),
        "dropped": dropped,
        "steps": executed,
        **draws,
    }
