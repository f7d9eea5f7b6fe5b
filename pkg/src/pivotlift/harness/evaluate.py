"""Batched rollout evaluation for trained policies and open-loop plans.

Both entry points build the same vectorized environment from the same
seed, so the per-rollout randomization draws line up index for index:
rollout i of a policy evaluation and rollout i of a plan replay face
the identical gravity, box, friction, and spawn pose. That pairing is
what makes the two success rates directly comparable.

Rollouts that end early (termination or a numerical fault) are parked:
their state is overwritten with a static resting configuration and
they coast to the end of the batch loop without touching any random
stream, so one early failure cannot perturb its neighbours.
"""

from __future__ import annotations

import numpy as np

from ..env import VecTaskEnv
from ..env.reward import check_termination, goal_distances, task_reward
from ..env.task import CONTROL_SUBSTEPS
from ..errors import NumericError
from ..sim import engine
from .report import EvalReport


def _capture_draws(env):
    """Per-rollout randomization values, read back from the batch
    right after reset. dim_scale is reported as the applied ratio."""
    nom = env.world
    return {
        "gravity": env.bp.gravity.copy(),
        "dim_scale": env.bp.hx / nom.half_extents[0],
        "box_mass": env.bp.box_mass.copy(),
        "friction": env.bp.friction.copy(),
        "init_x": env.q[:, 4].copy(),
        "init_z": env.q[:, 5].copy(),
        "init_theta": env.q[:, 6].copy(),
    }


def _park_rows(env, rows):
    # static resting pose: home arms, box flat at its rest height
    for i in rows:
        env.q[i, :4] = env.home_q_a
        env.q[i, 4] = env.cfg.nominal_start[0]
        env.q[i, 6] = 0.0
        env.q[i, 5] = float(engine.resting_height(0.0, env.bp, i))
        env.v[i] = 0.0
        env.cmd[i] = env.home_q_a


class _Book:
    """Per-rollout bookkeeping shared by policy and replay loops."""

    def __init__(self, env, success_trans, success_rot):
        n = env.batch
        self.env = env
        self.success_trans = success_trans
        self.success_rot = success_rot
        self.done = np.zeros(n, dtype=bool)
        self.dropped = np.zeros(n, dtype=bool)
        self.task_reward = np.zeros(n)
        self.steps = np.zeros(n, dtype=np.int64)
        d_trans, d_rot = goal_distances(env.q[:, 4:], env.cfg.goal)
        self.min_d_trans = d_trans.copy()
        self.min_d_rot = d_rot.copy()
        self.final_d_trans = d_trans.copy()
        self.final_d_rot = d_rot.copy()
        # success means both thresholds hold at once, initial state included
        self.success = (d_trans <= success_trans) & (d_rot <= success_rot)

    def record(self, reward, d_trans, d_rot, term):
        """Fold one finished control step into the live rollouts;
        returns the rows that just terminated."""
        live = ~self.done
        self.task_reward[live] += reward[live]
        self.steps[live] += 1
        self.min_d_trans[live] = np.minimum(self.min_d_trans[live],
                                            d_trans[live])
        self.min_d_rot[live] = np.minimum(self.min_d_rot[live], d_rot[live])
        self.final_d_trans[live] = d_trans[live]
        self.final_d_rot[live] = d_rot[live]
        self.success |= live & (d_trans <= self.success_trans) \
            & (d_rot <= self.success_rot)
        ended = live & term
        self.done |= ended
        self.dropped |= ended
        return np.flatnonzero(ended)

    def fail_rows(self, rows):
        """Force-finish specific rows after a numerical fault."""
        rows = [i for i in rows if not self.done[i]]
        for i in rows:
            self.done[i] = True
            self.dropped[i] = True
            self.steps[i] += 1
        return rows

    def worst_live_row(self):
        """Deterministic blame pick when a fault names no row: the live
        rollout moving fastest is the one about to diverge."""
        live = np.flatnonzero(~self.done)
        speed = np.max(np.abs(self.env.v[live]), axis=1)
        return int(live[np.argmax(speed)])

    def to_report(self, draws, meta):
        report = EvalReport(meta=meta)
        for i in range(self.env.batch):
            report.add_row(
                rollout=i,
                task_reward=float(self.task_reward[i]),
                min_d_trans=float(self.min_d_trans[i]),
                min_d_rot=float(self.min_d_rot[i]),
                final_d_trans=float(self.final_d_trans[i]),
                final_d_rot=float(self.final_d_rot[i]),
                success=int(self.success[i]),
                dropped=int(self.dropped[i]),
                steps=int(self.steps[i]),
                gravity=float(draws["gravity"][i]),
                dim_scale=float(draws["dim_scale"][i]),
                box_mass=float(draws["box_mass"][i]),
                friction=float(draws["friction"][i]),
                init_x=float(draws["init_x"][i]),
                init_z=float(draws["init_z"][i]),
                init_theta=float(draws["init_theta"][i]),
            )
        return report


def evaluate_policy(policy, norm, world, env_cfg, n, seed, randomize=True,
                    success_trans=0.05, success_rot=0.2, meta=None):
    """Roll out the deterministic (mean-action) policy n times.

    Each rollout runs to termination or the configured episode length.
    Returns an EvalReport with one row per rollout.
    """
    env = VecTaskEnv(world, env_cfg, batch=n, seed=seed, randomize=randomize)
    obs = env.reset_all()
    draws = _capture_draws(env)
    book = _Book(env, success_trans, success_rot)

    for _ in range(env.cfg.episode_length):
        if book.done.all():
            break
        act = policy.mean_action(norm.normalize(obs))
        act = np.where(np.isfinite(act), act, 0.0)
        act[book.done] = 0.0
        while True:
            cmd_snapshot = env.cmd.copy()
            try:
                obs, reward, term, _, info = env.step(act)
                break
            except NumericError:
                # step rejected: cmd integration is rolled back, the
                # offending row is failed and parked, then the step is
                # retried with it held static
                env.cmd = cmd_snapshot
                term_now = check_termination(
                    env.q[:, 4:], env.bp.hx, env.bp.hz, env.cfg.termination)
                blame = np.flatnonzero(term_now & ~book.done)
                if len(blame) == 0:
                    blame = [book.worst_live_row()]
                failed = book.fail_rows(blame)
                _park_rows(env, failed)
                act[book.done] = 0.0
        just_ended = book.record(reward, info["d_trans"], info["d_rot"], term)
        _park_rows(env, just_ended)
        obs = env.observe()

    return book.to_report(draws, meta or {})


def evaluate_replay(plan_t, world, env_cfg, n, seed, randomize=True,
                    hold_to=None, success_trans=0.05, success_rot=0.2,
                    meta=None):
    """Execute a plan's arm trajectory open loop across n rollouts.

    Commands are fed to the actuators exactly as planned, with the same
    per-rollout actuation noise a policy would face, but nothing reacts
    to how the box actually moves. hold_to pads short plans by holding
    the final command until that many control steps have run.
    """
    env = VecTaskEnv(world, env_cfg, batch=n, seed=seed, randomize=randomize)
    env.reset_all()
    draws = _capture_draws(env)
    book = _Book(env, success_trans, success_rot)

    cmds = np.asarray(plan_t.q_a, dtype=np.float64)
    total = len(cmds)
    if hold_to is not None and total > 0:
        total = max(total, int(hold_to))

    sigma = env.cfg.randomization.action_noise
    h = world.dynamic_step

    for k in range(total):
        if book.done.all():
            break
        target = cmds[min(k, len(cmds) - 1)]
        cmd = np.tile(target, (n, 1))
        cmd[book.done] = env.home_q_a
        # every rollout draws noise every step, parked ones included,
        # so stream consumption never depends on who failed when
        if sigma > 0.0 and randomize:
            noise = np.stack([rng.normal(0.0, sigma, size=4)
                              for rng in env.rngs])
        else:
            noise = np.zeros((n, 4))
        q_a_before = env.q[:, :4].copy()
        while True:
            applied = np.where(book.done[:, None],
                               env.home_q_a[None, :], cmd + noise)
            try:
                q, v = env.q, env.v
                for _ in range(CONTROL_SUBSTEPS):
                    q, v = engine.dynamic_step(q, v, applied, env.bp, h=h)
                env.q, env.v = q, v
                break
            except NumericError:
                term_now = check_termination(
                    env.q[:, 4:], env.bp.hx, env.bp.hz, env.cfg.termination)
                blame = np.flatnonzero(term_now & ~book.done)
                if len(blame) == 0:
                    blame = [book.worst_live_row()]
                _park_rows(env, book.fail_rows(blame))
        env.cmd = cmd
        term = check_termination(env.q[:, 4:], env.bp.hx, env.bp.hz,
                                 env.cfg.termination)
        pen_action = cmd - q_a_before
        reward = task_reward(
            env.q[:, 4:], pen_action, env.v[:, 4:], term,
            env.cfg.goal, env.cfg.weights,
            velocity_rot_weight=env.cfg.velocity_rot_weight)
        d_trans, d_rot = goal_distances(env.q[:, 4:], env.cfg.goal)
        just_ended = book.record(reward, d_trans, d_rot, term)
        _park_rows(env, just_ended)

    return book.to_report(draws, meta or {})
