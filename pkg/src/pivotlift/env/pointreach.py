"""Fingertip point-reach: a contact-free diagnostic environment.

Same action interface and physics as the task environment, but the box
is parked far away, there is no randomization or noise, and the reward
is the negative sum of fingertip distances to two fixed targets. A
scripted controller gives a near-optimal return for calibrating
learning progress.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from ..sim import engine, geometry as geo
from ..sim.params import BatchParams
from .task import CONTROL_SUBSTEPS

# within a short transit of the home fingertip positions: delta-command
# exploration is diffusive, so far targets turn a trainer check into an
# exploration benchmark
TARGETS = ((0.45, 0.78), (0.46, 0.14))
PARKED_BOX = (2.0, 0.132, 0.0)
# long enough that holding position dominates the return over the
# transit, which is what a convergence check should grade
EPISODE_LENGTH = 150
# Bent elbows keep the arms away from the straight-arm singularity,
# where the tip radius has no first-order response to the elbow joint.
HOME_POSE = (0.2, 0.6, -0.2, -0.6)
RESET_JITTER = 0.1


class VecPointReachEnv:
    # The command integrator is part of the state the policy controls,
    # and the joints only follow it after a short lag; without it in
    # the observation the loop learns to fight its own corrections.
    OBS_DIM = 12
    ACT_DIM = 4

    def __init__(self, world, batch=1, seed=0, action_scale=0.05,
                 command_limit=2.8):
        self.world = world
        self.batch = int(batch)
        self.action_scale = float(action_scale)
        self.command_limit = float(command_limit)
        self.bp = BatchParams(world, self.batch)
        self.targets = np.array(TARGETS)
        self.rngs = [np.random.default_rng(s)
                     for s in np.random.SeedSequence(seed).spawn(self.batch)]
        self.q = np.zeros((self.batch, geo.NQ))
        self.v = np.zeros((self.batch, geo.NQ))
        self.cmd = np.zeros((self.batch, 4))
        self.steps = np.zeros(self.batch, dtype=np.int64)
        self.terminated = np.zeros(self.batch, dtype=bool)  # never set
        self.truncated = np.zeros(self.batch, dtype=bool)

    def reset_all(self):
        self._reset_rows(np.ones(self.batch, dtype=bool))
        return self.observe()

    def reset_done(self):
        mask = self.truncated
        if np.any(mask):
            self._reset_rows(mask)
        return self.observe()

    def _reset_rows(self, mask):
        idx = np.flatnonzero(mask)
        home = np.asarray(HOME_POSE)
        for i in idx:
            start = home + self.rngs[i].uniform(-RESET_JITTER, RESET_JITTER,
                                                size=4)
            self.q[i, :4] = start
            self.q[i, 4:] = PARKED_BOX
            self.v[i] = 0.0
            self.cmd[i] = start
        self.steps[idx] = 0
        self.truncated[idx] = False

    def recover_nonfinite(self):
        bad = ~np.all(np.isfinite(self.q) & np.isfinite(self.v), axis=1)
        if bad.any():
            self._reset_rows(bad)
        return bad

    def observe(self):
        obs = np.empty((self.batch, self.OBS_DIM))
        obs[:, 0:4] = self.q[:, 0:4]
        obs[:, 4:8] = geo.fingertips(self.q[:, :4], self.world).reshape(
            self.batch, 4)
        obs[:, 8:12] = self.cmd
        return obs

    def _reward(self):
        tips = geo.fingertips(self.q[:, :4], self.world)
        d = np.linalg.norm(tips - self.targets[None], axis=-1)
        return -d.sum(axis=1)

    def step(self, actions):
        actions = np.asarray(actions, dtype=np.float64)
        if not np.all(np.isfinite(actions)):
            raise NumericError("non-finite action")
        actions = np.clip(actions, -1.0, 1.0)
        self.cmd = np.clip(self.cmd + actions * self.action_scale,
                           -self.command_limit, self.command_limit)
        for _ in range(CONTROL_SUBSTEPS):
            self.q, self.v = engine.dynamic_step(
                self.q, self.v, self.cmd, self.bp)
        self.steps += 1
        self.truncated = self.steps >= EPISODE_LENGTH
        reward = self._reward()
        return self.observe(), reward, self.terminated.copy(), \
            self.truncated.copy(), {}


def passive_return(world, episode_length=EPISODE_LENGTH, seed=0):
    """Return of the do-nothing policy, the floor for scoring learning
    progress against the scripted ceiling."""
    env = VecPointReachEnv(world, batch=1, seed=seed)
    env.reset_all()
    total = 0.0
    zero = np.zeros((1, 4))
    for _ in range(episode_length):
        _, r, _, _, _ = env.step(zero)
        total += float(r[0])
    return total


def scripted_return(world, episode_length=EPISODE_LENGTH, seed=0):
    """Greedy reference: drive each arm's command straight to the IK
    solution at full step rate. Returns the episode return."""
    env = VecPointReachEnv(world, batch=1, seed=seed)
    env.reset_all()
    goal_q = np.empty(4)
    for arm, tgt in enumerate(TARGETS):
        sol = geo.inverse_kinematics(tgt, arm, world,
                                     q_ref=tuple(env.q[0, 2 * arm:
                                                       2 * arm + 2]))
        assert sol is not None
        goal_q[2 * arm:2 * arm + 2] = sol
    total = 0.0
    for _ in range(episode_length):
        delta = np.clip(goal_q - env.cmd[0], -env.action_scale,
                        env.action_scale)
        act = (delta / env.action_scale)[None]
        _, r, _, _, _ = env.step(act)
        total += float(r[0])
    return total
