"""Vectorized pivot-and-lift environment.

All environments advance together on (B, .) arrays. Each environment
owns an independent random stream, so reset draws and action noise in
one environment never perturb another's trajectory.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, NumericError
from ..sim import engine, geometry as geo
from ..sim.params import BatchParams
from .config import EnvConfig
from .reward import check_termination, goal_distances, task_reward

CONTROL_SUBSTEPS = 4  # dynamic frames per policy step: 1/15 s at 1/60 s frames


class VecTaskEnv:
    """B parallel task environments over one shared physics batch.

    Usage: obs = env.reset_all(); then repeatedly step(actions) and
    reset_done(). step() does not auto-reset, so post-step states can be
    inspected; reset_done() re-randomizes exactly the done environments.
    """

    OBS_DIM = 11
    ACT_DIM = 4

    def __init__(self, world, cfg=None, batch=1, seed=0, randomize=True):
        self.world = world
        self.cfg = cfg if cfg is not None else EnvConfig()
        self.batch = int(batch)
        self.randomize = bool(randomize)
        self.bp = BatchParams(world, self.batch)
        self.rngs = [np.random.default_rng(ss)
                     for ss in np.random.SeedSequence(seed).spawn(self.batch)]

        self.home_q_a = self._solve_home(world, self.cfg)
        self.q = np.zeros((self.batch, geo.NQ))
        self.v = np.zeros((self.batch, geo.NQ))
        self.cmd = np.zeros((self.batch, 4))
        self.steps = np.zeros(self.batch, dtype=np.int64)
        self.terminated = np.zeros(self.batch, dtype=bool)
        self.truncated = np.zeros(self.batch, dtype=bool)

    @staticmethod
    def _solve_home(world, cfg):
        home = np.empty(4)
        for arm, target in enumerate(cfg.home_targets):
            sol = geo.inverse_kinematics(target, arm, world, q_ref=(0.0, 0.0))
            if sol is None:
                raise ConfigError(
                    f"home target {target} unreachable for arm {arm}")
            home[2 * arm:2 * arm + 2] = sol
        return home

    # ------------------------------------------------------------------
    # reset machinery

    def reset_all(self):
        self._reset_rows(np.ones(self.batch, dtype=bool))
        return self.observe()

    def reset_done(self):
        """Re-randomize exactly the done environments; others untouched."""
        mask = self.terminated | self.truncated
        if np.any(mask):
            self._reset_rows(mask)
        return self.observe()

    def _reset_rows(self, mask):
        idx = np.flatnonzero(mask)
        rs = self.cfg.randomization if self.randomize else \
            self.cfg.randomization.zero_width()
        nom = self.world
        cx, cz = self.cfg.nominal_start
        for i in idx:
            rng = self.rngs[i]
            # fixed draw order keeps per-env streams reproducible
            self.bp.gravity[i] = nom.gravity + rng.uniform(
                0.0, rs.gravity_disturbance)
            dim = rng.uniform(*rs.dim_scale)
            self.bp.hx[i] = nom.half_extents[0] * dim
            self.bp.hz[i] = nom.half_extents[1] * dim
            self.bp.box_mass[i] = nom.box_mass * rng.uniform(*rs.mass_scale)
            self.bp.friction[i] = nom.friction * rng.uniform(*rs.friction_scale)
            # uniform over the disc: radius with area correction
            r = rs.position_radius * np.sqrt(rng.uniform())
            ang = rng.uniform(0.0, 2.0 * np.pi)
            theta = rng.uniform(-rs.theta_range, rs.theta_range)
            x = cx + r * np.cos(ang)
            z = cz + r * np.sin(ang)
            # never spawn interpenetrating: lift to the static rest height
            z = max(z, float(engine.resting_height(theta, self.bp, i)))
            self.q[i, :4] = self.home_q_a
            self.q[i, 4:] = (x, z, theta)
            self.v[i] = 0.0
            self.cmd[i] = self.home_q_a
        self.steps[idx] = 0
        self.terminated[idx] = False
        self.truncated[idx] = False

    def recover_nonfinite(self):
        """Reset any env whose state went non-finite; returns the row
        mask so the caller can log and discount those samples."""
        bad = ~np.all(np.isfinite(self.q) & np.isfinite(self.v), axis=1)
        if bad.any():
            self._reset_rows(bad)
        return bad

    # ------------------------------------------------------------------

    def observe(self):
        obs = np.empty((self.batch, self.OBS_DIM))
        obs[:, 0:4] = self.q[:, 0:4]
        obs[:, 4:7] = self.q[:, 4:7]
        obs[:, 7:11] = geo.fingertips(self.q[:, :4], self.world).reshape(
            self.batch, 4)
        return obs

    def step(self, actions):
        """Advance every environment one control period.

        actions: (B, 4) in [-1, 1]. Returns (obs, reward, terminated,
        truncated, info) with info carrying the goal distances.
        """
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.batch, self.ACT_DIM):
            raise NumericError(
                f"actions must have shape {(self.batch, self.ACT_DIM)}, "
                f"got {actions.shape}")
        if not np.all(np.isfinite(actions)):
            raise NumericError("non-finite action")
        actions = np.clip(actions, -1.0, 1.0)

        q_a_before = self.q[:, :4].copy()
        delta = actions * self.cfg.action_scale
        self.cmd = np.clip(self.cmd + delta,
                           -self.cfg.command_limit, self.cfg.command_limit)
        noise = np.stack([rng.normal(0.0, self.cfg.randomization.action_noise,
                                     size=4)
                          for rng in self.rngs]) \
            if self.cfg.randomization.action_noise > 0.0 and self.randomize \
            else np.zeros((self.batch, 4))
        applied = self.cmd + noise

        h = self.world.dynamic_step
        for _ in range(CONTROL_SUBSTEPS):
            self.q, self.v = engine.dynamic_step(
                self.q, self.v, applied, self.bp, h=h)

        self.terminated = check_termination(
            self.q[:, 4:], self.bp.hx, self.bp.hz, self.cfg.termination)
        self.steps += 1
        self.truncated = self.steps >= self.cfg.episode_length

        # the penalized action is the commanded offset from where the
        # joints actually are, not the raw policy delta
        pen_action = self.cmd - q_a_before
        reward = task_reward(
            self.q[:, 4:], pen_action, self.v[:, 4:], self.terminated,
            self.cfg.goal, self.cfg.weights,
            velocity_rot_weight=self.cfg.velocity_rot_weight)
        d_trans, d_rot = goal_distances(self.q[:, 4:], self.cfg.goal)
        info = {"d_trans": d_trans, "d_rot": d_rot}
        return self.observe(), reward, self.terminated.copy(), \
            self.truncated.copy(), info
