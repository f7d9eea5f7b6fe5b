"""Full on-policy training loop: collect, estimate, update, log.

Everything runs single-threaded off one seed tree, so two runs with the
same seed and config produce byte-identical logs and checkpoints.
"""

from __future__ import annotations

import collections
import time

import numpy as np

from ..amp import (AmpDiscriminator, DemoTransitionSet, TransitionReplay,
                   combined_reward, style_reward)
from ..errors import CheckpointError, ConfigError, NumericError
from ..nn import load_checkpoint, save_checkpoint
from ..nn.adam import Adam
from .config import PpoConfig
from .gae import compute_gae, normalize_advantages
from .norm import RunningNorm
from .policy import GaussianPolicy, ValueNet
from .update import ppo_update

REPLAY_CAPACITY = 100_000
CSV_COLUMNS = ("iteration", "env_steps", "ep_task_reward_mean",
               "ep_task_reward_std", "style_reward_mean", "disc_loss",
               "disc_accuracy", "approx_kl", "lr", "wall_time")


def _fmt(x):
    return format(float(x), ".17g")


class PpoTrainer:

    def __init__(self, env, cfg=None, seed=0, demo_joints=None,
                 deterministic_time=True):
        self.env = env
        self.cfg = cfg if cfg is not None else PpoConfig()
        self.seed = int(seed)
        self.deterministic_time = deterministic_time
        ss = np.random.SeedSequence(self.seed)
        init_ss, act_ss, shuffle_ss, disc_ss = ss.spawn(4)
        init_rng = np.random.default_rng(init_ss)
        self.act_rng = np.random.default_rng(act_ss)
        self.shuffle_rng = np.random.default_rng(shuffle_ss)
        self.disc_rng = np.random.default_rng(disc_ss)

        self.policy = GaussianPolicy(
            env.OBS_DIM, env.ACT_DIM, init_rng,
            hidden=self.cfg.policy_hidden,
            log_std_init=self.cfg.log_std_init,
            log_std_bounds=self.cfg.log_std_bounds)
        self.value_net = ValueNet(env.OBS_DIM, init_rng,
                                  hidden=self.cfg.value_hidden)
        self.policy_opt = Adam(self.policy.parameters,
                               lr=self.cfg.learning_rate)
        self.value_opt = Adam(self.value_net.parameters,
                              lr=self.cfg.learning_rate)
        self.obs_norm = RunningNorm(env.OBS_DIM)

        if self.cfg.style_mix < 1.0:
            if demo_joints is None:
                raise ConfigError(
                    "style_mix < 1 needs a demonstration trajectory")
            self.demo = DemoTransitionSet(demo_joints)
            self.disc = AmpDiscriminator(init_rng)
            self.replay = TransitionReplay(REPLAY_CAPACITY)
        else:
            self.demo = None
            self.disc = None
            self.replay = None

        self.iteration = 0
        self.env_faults = 0
        self.episode_returns = collections.deque(maxlen=100)
        self._ep_accum = np.zeros(env.batch)
        env.reset_all()

    # ------------------------------------------------------------ rollout

    def collect_rollout(self):
        cfg, env = self.cfg, self.env
        horizon, nenv = cfg.horizon, env.batch
        obs_raw = np.empty((horizon, nenv, env.OBS_DIM))
        obs_n = np.empty_like(obs_raw)
        actions = np.empty((horizon, nenv, env.ACT_DIM))
        log_probs = np.empty((horizon, nenv))
        values = np.empty((horizon, nenv))
        rewards = np.empty((horizon, nenv))
        task_rewards = np.empty((horizon, nenv))
        dones = np.empty((horizon, nenv))
        style_sum = 0.0
        transitions = (np.empty((horizon, nenv, 8))
                       if self.disc is not None else None)

        obs = env.observe()
        next_pre_reset = obs
        for t in range(horizon):
            obs_raw[t] = obs
            obs_n[t] = self.obs_norm.normalize(obs)
            raw, clipped, logp = self.policy.act(obs_n[t], self.act_rng)
            values[t] = self.value_net.values(obs_n[t])
            q_a_before = env.q[:, :4].copy()
            try:
                next_obs, task_r, term, trunc, _ = env.step(clipped)
            except NumericError:
                bad = env.recover_nonfinite()
                self.env_faults += int(bad.sum())
                next_obs = env.observe()
                task_r = np.zeros(nenv)
                term, trunc = bad.copy(), np.zeros(nenv, dtype=bool)
                if bad.any():
                    # Replace the poisoned rows of this sample with a
                    # consistent benign triple so the update stays finite.
                    z = np.zeros((int(bad.sum()), env.OBS_DIM))
                    obs_raw[t][bad] = 0.0
                    obs_n[t][bad] = 0.0
                    raw = raw.copy()
                    raw[bad] = 0.0
                    logp = logp.copy()
                    logp[bad] = self.policy.log_prob_np(z, raw[bad])
                    values[t][bad] = self.value_net.values(z)
                    q_a_before[bad] = env.q[bad, :4]

            if self.disc is not None:
                trans = np.concatenate([q_a_before, env.q[:, :4]], axis=1)
                transitions[t] = trans
                scores = self.disc.scores(self.demo.normalize(trans))
                r_style = style_reward(scores)
                style_sum += float(r_style.mean())
                reward = combined_reward(task_r, r_style, cfg.style_mix)
            else:
                reward = task_r

            # truncated-but-alive rows keep their tail value through the
            # reward, since GAE treats every done row as absorbing
            boot = trunc & ~term
            if boot.any():
                next_v = self.value_net.values(
                    self.obs_norm.normalize(next_obs[boot]))
                reward = reward.astype(np.float64, copy=True)
                reward[boot] += cfg.discount * next_v

            rewards[t] = reward
            task_rewards[t] = task_r
            dones[t] = (term | trunc).astype(np.float64)
            actions[t] = raw
            log_probs[t] = logp

            self._ep_accum += task_r
            finished = term | trunc
            for i in np.flatnonzero(finished):
                self.episode_returns.append(self._ep_accum[i])
                self._ep_accum[i] = 0.0

            next_pre_reset = next_obs
            env.reset_done()
            obs = env.observe()

        final_values = self.value_net.values(
            self.obs_norm.normalize(next_pre_reset))
        self.obs_norm.update(obs_raw.reshape(-1, env.OBS_DIM))
        batch = {
            "obs": obs_n.reshape(-1, env.OBS_DIM),
            "actions": actions.reshape(-1, env.ACT_DIM),
            "log_probs": log_probs.reshape(-1),
            "rewards": rewards,
            "task_rewards": task_rewards,
            "values": values,
            "dones": dones,
            "final_values": final_values,
            # zero, not NaN, for pure-task runs: comparison tooling can
            # then always treat the column as numeric
            "style_reward_mean": (style_sum / horizon
                                  if self.disc is not None else 0.0),
        }
        if transitions is not None:
            batch["transitions"] = transitions.reshape(-1, 8)
        return batch

    # ------------------------------------------------------------ updates

    def _snapshot(self):
        return [(k, v.copy()) for k, v in self._all_arrays()]

    def _restore(self, snap):
        named = dict(snap)
        for k, v in self._all_arrays():
            v[...] = named[k]

    def _all_arrays(self):
        out = list(self.policy.state_arrays())
        out += [("pi_" + k, v) for k, v in self.policy_opt.state_arrays()]
        out += self.value_net.state_arrays()
        out += [("vf_" + k, v) for k, v in self.value_opt.state_arrays()]
        return out

    def iterate(self):
        """One full training iteration; returns the metrics row."""
        t0 = time.perf_counter()
        batch = self.collect_rollout()
        adv, ret = compute_gae(batch["rewards"], batch["values"],
                               batch["final_values"], batch["dones"],
                               self.cfg.discount, self.cfg.gae_decay)
        data = {
            "obs": batch["obs"],
            "actions": batch["actions"],
            "log_probs": batch["log_probs"],
            "advantages": normalize_advantages(adv).reshape(-1),
            "returns": ret.reshape(-1),
        }
        snap = self._snapshot()
        try:
            metrics = ppo_update(self.policy, self.value_net,
                                 self.policy_opt, self.value_opt,
                                 data, self.cfg, self.shuffle_rng)
        except NumericError:
            self._restore(snap)
            metrics = {"policy_loss": float("nan"),
                       "value_loss": float("nan"),
                       "approx_kl": float("nan"),
                       "clip_fraction": float("nan"),
                       "lr": self.policy_opt.lr,
                       "aborted": True}

        if self.disc is not None:
            d_loss, d_acc_demo, d_acc_pol = self.disc.update_epoch(
                self.demo, self.replay, batch["transitions"], self.disc_rng)
            metrics["disc_loss"] = d_loss
            metrics["disc_accuracy"] = 0.5 * (d_acc_demo + d_acc_pol)
        else:
            metrics["disc_loss"] = float("nan")
            metrics["disc_accuracy"] = float("nan")

        returns_window = list(self.episode_returns)
        metrics["ep_task_reward_mean"] = (float(np.mean(returns_window))
                                          if returns_window else float("nan"))
        metrics["ep_task_reward_std"] = (float(np.std(returns_window))
                                         if returns_window else float("nan"))
        metrics["style_reward_mean"] = batch["style_reward_mean"]
        self.iteration += 1
        metrics["iteration"] = self.iteration
        metrics["env_steps"] = self.iteration * self.cfg.samples_per_iteration
        metrics["wall_time"] = (0.0 if self.deterministic_time
                                else time.perf_counter() - t0)
        return metrics

    # ------------------------------------------------------------- driver

    def train(self, iterations=None, csv_path=None, checkpoint_prefix=None,
              log_every=0, csv_append=False):
        n = iterations if iterations is not None else self.cfg.max_iterations
        csv = open(csv_path, "a" if csv_append else "w") if csv_path else None
        if csv and not csv_append:
            csv.write("# pivotlift-train v1\n")
            csv.write(f"# seed: {self.seed}\n")
            csv.write(f"# style_mix: {_fmt(self.cfg.style_mix)}\n")
            csv.write(",".join(CSV_COLUMNS) + "\n")
        try:
            for _ in range(n):
                m = self.iterate()
                if csv:
                    row = [str(m["iteration"]), str(m["env_steps"])]
                    row += [_fmt(m[c]) for c in CSV_COLUMNS[2:]]
                    csv.write(",".join(row) + "\n")
                    csv.flush()
                if log_every and m["iteration"] % log_every == 0:
                    print(f"iter {m['iteration']:5d} "
                          f"ep_reward {m['ep_task_reward_mean']:.3f} "
                          f"kl {m['approx_kl']:.2e} lr {m['lr']:.2e}")
                if (checkpoint_prefix
                        and self.iteration % self.cfg.checkpoint_interval == 0):
                    self.save(f"{checkpoint_prefix}_iter{self.iteration:05d}"
                              ".ckpt")
            if checkpoint_prefix:
                self.save(f"{checkpoint_prefix}_final.ckpt")
        finally:
            if csv:
                csv.close()

    # -------------------------------------------------------- persistence

    def save(self, path):
        arrays = self._all_arrays()
        arrays += self.obs_norm.state_arrays()
        if self.disc is not None:
            arrays += [("disc_" + k, v) for k, v in self.disc.state_arrays()]
        extra = {
            "kind": "ppo-trainer",
            "config": self.cfg.to_dict(),
            "seed": self.seed,
            "iteration": self.iteration,
            "obs_dim": self.env.OBS_DIM,
            "act_dim": self.env.ACT_DIM,
        }
        save_checkpoint(path, arrays, extra=extra)

    @classmethod
    def restore(cls, path, env, demo_joints=None, deterministic_time=True):
        """Rebuild a trainer from a checkpoint and continue counting
        iterations where it left off.

        Random streams are re-derived from (seed, iteration), so a
        resumed run is deterministic given the checkpoint but does not
        replay the exact byte sequence an uninterrupted run would have
        produced.
        """
        arrays, meta = load_checkpoint(path)
        if meta.get("kind") != "ppo-trainer":
            raise CheckpointError(f"{path}: not a trainer checkpoint")
        if meta["obs_dim"] != env.OBS_DIM or meta["act_dim"] != env.ACT_DIM:
            raise CheckpointError(
                f"{path}: checkpoint dims ({meta['obs_dim']}, "
                f"{meta['act_dim']}) do not match the environment "
                f"({env.OBS_DIM}, {env.ACT_DIM})")
        cfg = PpoConfig.from_dict(meta["config"])
        tr = cls(env, cfg, seed=meta["seed"], demo_joints=demo_joints,
                 deterministic_time=deterministic_time)
        tr.iteration = int(meta["iteration"])
        ss = np.random.SeedSequence((meta["seed"], tr.iteration))
        _, act_ss, shuffle_ss, disc_ss = ss.spawn(4)
        tr.act_rng = np.random.default_rng(act_ss)
        tr.shuffle_rng = np.random.default_rng(shuffle_ss)
        tr.disc_rng = np.random.default_rng(disc_ss)
        tr.policy.load_state_arrays(
            [(k, v) for k, v in arrays
             if k.startswith(("w", "b", "log_std"))])
        tr.value_net.load_state_arrays(arrays)
        tr.policy_opt.load_state_arrays(
            [(k[3:], v) for k, v in arrays if k.startswith("pi_")])
        tr.value_opt.load_state_arrays(
            [(k[3:], v) for k, v in arrays if k.startswith("vf_")])
        tr.obs_norm.load_state_arrays(arrays)
        if tr.disc is not None:
            disc_arrays = [(k[5:], v) for k, v in arrays
                           if k.startswith("disc_")]
            if not disc_arrays:
                raise CheckpointError(
                    f"{path}: style_mix < 1 but checkpoint carries no "
                    "discriminator state")
            tr.disc.load_state_arrays(disc_arrays)
        return tr


def load_policy_bundle(path):
    """Rebuild an evaluation-ready (policy, obs_norm, meta) from a
    trainer checkpoint. Network sizes come from the stored shapes."""
    arrays, meta = load_checkpoint(path)
    named = dict(arrays)
    widths = []
    i = 0
    while f"w{i}" in named:
        widths.append(named[f"w{i}"].shape)
        i += 1
    obs_dim = widths[0][0]
    hidden = tuple(w.shape[1] for w in [named[f"w{j}"]
                                        for j in range(len(widths) - 1)])
    act_dim = widths[-1][1]
    policy = GaussianPolicy(obs_dim, act_dim, np.random.default_rng(0),
                            hidden=hidden)
    policy.load_state_arrays([(k, v) for k, v in arrays
                              if k.startswith(("w", "b", "log_std"))])
    norm = RunningNorm(obs_dim)
    norm.load_state_arrays(arrays)
    return policy, norm, meta
