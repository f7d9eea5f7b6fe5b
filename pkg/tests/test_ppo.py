"""Trainer components: advantage oracles, clip arithmetic, determinism."""

import numpy as np
import pytest

from pivotlift.env import VecPointReachEnv, VecTaskEnv
from pivotlift.errors import ConfigError, NumericError
from pivotlift.nn.tensor import Tensor
from pivotlift.ppo import (GaussianPolicy, PpoConfig, PpoTrainer, RunningNorm,
                           ValueNet, adapt_learning_rate, approx_kl_k3,
                           compute_gae, load_policy_bundle,
                           normalize_advantages, ppo_update,
                           surrogate_objective)
from pivotlift.sim.params import WorldParams

LOG_2PI = np.log(2.0 * np.pi)


def small_cfg(**kw):
    base = dict(num_envs=4, horizon=8, samples_per_iteration=32,
                minibatch_size=16, epochs=2, max_iterations=10)
    base.update(kw)
    return PpoConfig(**base)


# ------------------------------------------------------------------- GAE

def test_gae_single_terminal_step():
    adv, ret = compute_gae(rewards=[[1.0]], values=[[0.0]],
                           final_values=[5.0], dones=[[1.0]],
                           discount=0.99, decay=0.95)
    assert adv[0, 0] == 1.0
    assert ret[0, 0] == 1.0


def test_gae_single_nonterminal_delta():
    adv, _ = compute_gae(rewards=[[1.0]], values=[[0.5]],
                         final_values=[2.0], dones=[[0.0]],
                         discount=0.99, decay=0.95)
    assert adv[0, 0] == 1.0 + 0.99 * 2.0 - 0.5


def test_gae_full_decay_equals_monte_carlo():
    rng = np.random.default_rng(7)
    horizon = 5
    r = rng.normal(size=(horizon, 3))
    v = rng.normal(size=(horizon, 3))
    v_final = rng.normal(size=3)
    g = 0.99
    adv, _ = compute_gae(r, v, v_final, np.zeros((horizon, 3)), g, 1.0)
    for t in range(horizon):
        mc = sum(g ** (k - t) * r[k] for k in range(t, horizon))
        mc = mc + g ** (horizon - t) * v_final
        np.testing.assert_allclose(adv[t], mc - v[t], rtol=0, atol=1e-12)


def test_gae_zero_decay_is_one_step_td():
    rng = np.random.default_rng(8)
    r = rng.normal(size=(6, 2))
    v = rng.normal(size=(6, 2))
    v_final = rng.normal(size=2)
    d = np.zeros((6, 2))
    d[3, 0] = 1.0
    adv, _ = compute_gae(r, v, v_final, d, 0.9, 0.0)
    next_v = np.vstack([v[1:], v_final[None]])
    expected = r + 0.9 * next_v * (1.0 - d) - v
    np.testing.assert_allclose(adv, expected, rtol=0, atol=1e-14)


def test_gae_done_blocks_credit_flow():
    # eventful reward after the episode break must not leak backward
    r = np.array([[0.0], [0.0], [100.0]])
    v = np.zeros((3, 1))
    d = np.array([[0.0], [1.0], [0.0]])
    adv, _ = compute_gae(r, v, [0.0], d, 0.99, 0.95)
    assert adv[0, 0] == 0.0 and adv[1, 0] == 0.0
    assert adv[2, 0] == 100.0


def test_gae_returns_are_adv_plus_values():
    rng = np.random.default_rng(9)
    r, v = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
    adv, ret = compute_gae(r, v, rng.normal(size=5),
                           np.zeros((4, 5)), 0.99, 0.95)
    np.testing.assert_array_equal(ret, adv + v)


def test_advantage_normalization_tolerances():
    adv = np.random.default_rng(3).normal(3.0, 10.0, size=(64, 64))
    z = normalize_advantages(adv)
    assert abs(z.mean()) <= 1e-10
    assert abs(z.std() - 1.0) <= 1e-6


# ------------------------------------------------------- lr adaptation

def test_lr_adaptation_band():
    assert adapt_learning_rate(5e-5, 8e-3) == 5e-5
    assert adapt_learning_rate(5e-5, 0.1) == 5e-5 / 1.5
    assert adapt_learning_rate(5e-5, 1e-4) == 5e-5 * 1.5
    # band edges are inclusive of "no change"
    assert adapt_learning_rate(5e-5, 1.6e-2) == 5e-5
    assert adapt_learning_rate(5e-5, 4e-3) == 5e-5


def test_lr_adaptation_clamps():
    lr = 5e-4
    for _ in range(30):
        lr = adapt_learning_rate(lr, 1e-6)
    assert lr == 1e-3
    for _ in range(60):
        lr = adapt_learning_rate(lr, 1.0)
    assert lr == 1e-7


# ------------------------------------------------------ clip arithmetic

def test_surrogate_clip_positive_advantage():
    surr = surrogate_objective(Tensor(np.array([1.5])), np.array([1.0]), 0.2)
    assert surr.data[0] == 1.2


def test_surrogate_clip_negative_advantage():
    surr = surrogate_objective(Tensor(np.array([0.5])), np.array([-1.0]), 0.2)
    assert surr.data[0] == -0.8


def test_surrogate_lower_bounds_unclipped_for_positive_adv():
    rng = np.random.default_rng(4)
    ratio = np.exp(rng.normal(scale=0.5, size=200))
    adv = np.abs(rng.normal(size=200))
    surr = surrogate_objective(Tensor(ratio), adv, 0.2)
    assert np.all(surr.data <= ratio * adv + 1e-15)


# ------------------------------------------------------------- policy

def test_log_prob_matches_gaussian_density():
    rng = np.random.default_rng(5)
    pol = GaussianPolicy(6, 4, rng, hidden=(16,))
    obs = rng.normal(size=(10, 6))
    raw, clipped, logp = pol.act(obs, rng)
    mean = pol.mean_net.forward_np(obs)
    std = np.exp(pol.log_std.data)
    expected = (-0.5 * np.sum(((raw - mean) / std) ** 2, axis=1)
                - np.sum(np.log(std)) - 0.5 * 4 * LOG_2PI)
    np.testing.assert_allclose(logp, expected, rtol=0, atol=1e-12)
    assert np.all(np.abs(clipped) <= 1.0)


def test_ratio_is_one_before_any_update():
    rng = np.random.default_rng(6)
    pol = GaussianPolicy(6, 4, rng, hidden=(32, 16))
    obs = rng.normal(size=(64, 6))
    raw, _, logp_old = pol.act(obs, rng)
    logp_new = pol.log_prob(obs, raw)
    ratio = np.exp(logp_new.data - logp_old)
    np.testing.assert_allclose(ratio, 1.0, rtol=0, atol=1e-12)


def test_log_std_stays_in_bounds():
    pol = GaussianPolicy(4, 4, np.random.default_rng(0), hidden=(8,))
    pol.log_std.data[:] = 9.0
    pol.clamp_log_std()
    assert np.all(pol.log_std.data == 1.0)
    pol.log_std.data[:] = -9.0
    pol.clamp_log_std()
    assert np.all(pol.log_std.data == -4.0)


def test_entropy_closed_form():
    pol = GaussianPolicy(4, 4, np.random.default_rng(0), hidden=(8,))
    expected = np.sum(pol.log_std.data) + 0.5 * 4 * (1.0 + LOG_2PI)
    assert abs(pol.entropy().data - expected) <= 1e-12


def test_kl_estimator_zero_at_unity():
    assert approx_kl_k3(np.ones(100)) == 0.0
    # positive for any non-unit ratio
    assert approx_kl_k3(np.array([1.5, 0.5])) > 0.0


# ----------------------------------------------------------- ppo_update

def _fake_batch(rng, n=32, obs_dim=6):
    pol = GaussianPolicy(obs_dim, 4, rng, hidden=(16,))
    obs = rng.normal(size=(n, obs_dim))
    raw, _, logp = pol.act(obs, rng)
    return pol, {
        "obs": obs,
        "actions": raw,
        "log_probs": logp,
        "advantages": rng.normal(size=n),
        "returns": rng.normal(size=n),
    }


def test_zero_advantages_leave_policy_untouched():
    rng = np.random.default_rng(11)
    pol, data = _fake_batch(rng)
    data["advantages"] = np.zeros_like(data["advantages"])
    val = ValueNet(6, rng, hidden=(16,))
    from pivotlift.nn.adam import Adam
    p_opt, v_opt = Adam(pol.parameters, lr=1e-3), Adam(val.parameters,
                                                       lr=1e-3)
    before_pol = [p.data.copy() for p in pol.parameters]
    before_val = [p.data.copy() for p in val.parameters]
    cfg = small_cfg(minibatch_size=32, num_envs=1, horizon=32,
                    samples_per_iteration=32, epochs=1)
    ppo_update(pol, val, p_opt, v_opt, data, cfg, rng)
    for p, b in zip(pol.parameters, before_pol):
        np.testing.assert_array_equal(p.data, b)
    assert any(not np.array_equal(p.data, b)
               for p, b in zip(val.parameters, before_val))


def test_update_nonfinite_raises_before_stepping():
    rng = np.random.default_rng(12)
    pol, data = _fake_batch(rng)
    data["advantages"][0] = np.inf
    val = ValueNet(6, rng, hidden=(16,))
    from pivotlift.nn.adam import Adam
    cfg = small_cfg(minibatch_size=32, num_envs=1, horizon=32,
                    samples_per_iteration=32, epochs=1)
    with pytest.raises(NumericError):
        ppo_update(pol, val, Adam(pol.parameters), Adam(val.parameters),
                   data, cfg, rng)


def test_update_reduces_surrogate_on_synthetic_preference():
    # positive advantage iff action[0] > 0: after a few updates the
    # policy mean must shift toward positive first components
    rng = np.random.default_rng(13)
    pol = GaussianPolicy(4, 4, rng, hidden=(32,))
    val = ValueNet(4, rng, hidden=(16,))
    from pivotlift.nn.adam import Adam
    p_opt, v_opt = Adam(pol.parameters, lr=1e-3), Adam(val.parameters,
                                                       lr=1e-3)
    cfg = small_cfg(minibatch_size=64, num_envs=1, horizon=64,
                    samples_per_iteration=64, epochs=1,
                    lr_bounds=(1e-3, 1e-3))
    obs = rng.normal(size=(64, 4))
    for _ in range(30):
        raw, _, logp = pol.act(obs, rng)
        data = {"obs": obs, "actions": raw, "log_probs": logp,
                "advantages": np.sign(raw[:, 0]),
                "returns": np.zeros(64)}
        ppo_update(pol, val, p_opt, v_opt, data, cfg, rng)
    mean = pol.mean_net.forward_np(obs)
    assert mean[:, 0].mean() > 0.05


# -------------------------------------------------------------- config

def test_config_rejects_inconsistent_sampling():
    with pytest.raises(ConfigError):
        PpoConfig(num_envs=3, horizon=8, samples_per_iteration=32)
    with pytest.raises(ConfigError):
        PpoConfig(num_envs=4, horizon=8, samples_per_iteration=32,
                  minibatch_size=7)
    with pytest.raises(ConfigError):
        PpoConfig(style_mix=1.5)


def test_config_roundtrip():
    cfg = small_cfg(style_mix=0.9)
    again = PpoConfig.from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(ConfigError):
        PpoConfig.from_dict({"bogus": 1})


# ----------------------------------------------------------- running norm

def test_running_norm_matches_full_batch_stats():
    rng = np.random.default_rng(14)
    chunks = [rng.normal(2.0, 3.0, size=(50, 5)) for _ in range(4)]
    norm = RunningNorm(5)
    for c in chunks:
        norm.update(c)
    full = np.concatenate(chunks)
    np.testing.assert_allclose(norm.mean, full.mean(axis=0), atol=1e-10)
    np.testing.assert_allclose(norm.var, full.var(axis=0), atol=1e-10)


def test_running_norm_identity_before_first_update():
    norm = RunningNorm(3)
    x = np.array([[1.0, -2.0, 3.0]])
    np.testing.assert_array_equal(norm.normalize(x), x)


# ------------------------------------------------------------- trainer

def _reach_trainer(seed=0, **cfg_kw):
    env = VecPointReachEnv(WorldParams(), batch=4, seed=seed)
    return PpoTrainer(env, small_cfg(**cfg_kw), seed=seed)


def _same_metrics(a, b):
    # bitwise equality, with nan == nan
    if a.keys() != b.keys():
        return False
    return all(np.array_equal(np.asarray(a[k]), np.asarray(b[k]),
                              equal_nan=isinstance(a[k], float))
               for k in a)


def test_rollout_shapes_and_order():
    tr = _reach_trainer()
    batch = tr.collect_rollout()
    assert batch["obs"].shape == (32, 12)
    assert batch["actions"].shape == (32, 4)
    assert batch["rewards"].shape == (8, 4)
    assert np.all(np.isfinite(batch["obs"]))


def test_truncation_bootstraps_through_reward():
    tr = _reach_trainer()

    class ConstValue:
        def values(self, obs):
            return np.full(obs.shape[0], 2.0)

    tr.value_net = ConstValue()
    from pivotlift.env.pointreach import EPISODE_LENGTH
    tr.env.steps[:] = EPISODE_LENGTH - 1  # next step truncates
    batch = tr.collect_rollout()
    assert np.all(batch["dones"][0] == 1.0)
    boost = batch["rewards"][0] - batch["task_rewards"][0]
    np.testing.assert_allclose(boost, tr.cfg.discount * 2.0,
                               rtol=0, atol=1e-12)
    # later steps are fresh episodes, no bootstrap
    assert np.all(batch["dones"][1] == 0.0)


def test_trainer_iteration_metrics_and_determinism():
    m1 = [_reach_trainer(seed=5).iterate() for _ in range(1)][0]
    m2 = [_reach_trainer(seed=5).iterate() for _ in range(1)][0]
    assert _same_metrics(m1, m2)
    m3 = _reach_trainer(seed=6).iterate()
    assert m3["policy_loss"] != m1["policy_loss"]
    for key in ("policy_loss", "value_loss", "approx_kl", "clip_fraction",
                "lr"):
        assert np.isfinite(m1[key])


def test_train_csv_bytes_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _reach_trainer(seed=3).train(iterations=2, csv_path=str(a))
    _reach_trainer(seed=3).train(iterations=2, csv_path=str(b))
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("#")
    header = lines[3].split(",")
    assert header[0] == "iteration" and header[-1] == "wall_time"
    assert len(lines) == 4 + 2


def test_style_mix_one_ignores_demo_content():
    env1 = VecPointReachEnv(WorldParams(), batch=4, seed=2)
    env2 = VecPointReachEnv(WorldParams(), batch=4, seed=2)
    demo = np.cumsum(np.ones((40, 4)) * 0.01, axis=0)
    t1 = PpoTrainer(env1, small_cfg(), seed=2, demo_joints=None)
    t2 = PpoTrainer(env2, small_cfg(), seed=2, demo_joints=demo)
    assert _same_metrics(t1.iterate(), t2.iterate())


def test_style_mix_below_one_requires_demo():
    env = VecPointReachEnv(WorldParams(), batch=4, seed=0)
    with pytest.raises(ConfigError):
        PpoTrainer(env, small_cfg(style_mix=0.9), seed=0, demo_joints=None)


def test_snapshot_restore_roundtrip():
    tr = _reach_trainer()
    snap = tr._snapshot()
    for _, arr in tr._all_arrays():
        arr += 1.0
    tr._restore(snap)
    for (k, arr), (k2, saved) in zip(tr._all_arrays(), snap):
        assert k == k2
        np.testing.assert_array_equal(arr, saved)


def test_checkpoint_bundle_roundtrip(tmp_path):
    tr = _reach_trainer(seed=9)
    tr.iterate()
    path = tmp_path / "t.ckpt"
    tr.save(str(path))
    policy, norm, meta = load_policy_bundle(str(path))
    obs = np.random.default_rng(1).normal(size=(6, 12))
    np.testing.assert_array_equal(policy.mean_action(norm.normalize(obs)),
                                  tr.policy.mean_action(
                                      tr.obs_norm.normalize(obs)))
    assert meta["iteration"] == 1
    assert meta["config"]["minibatch_size"] == tr.cfg.minibatch_size


def test_env_fault_recovery_counts_and_continues():
    tr = _reach_trainer()
    tr.env.q[1, 0] = np.nan  # poison one env before the rollout
    batch = tr.collect_rollout()
    assert tr.env_faults >= 1
    assert np.all(np.isfinite(batch["obs"]))
    assert np.all(np.isfinite(batch["rewards"]))


def test_point_reach_learning_improves():
    # smoke check that reward goes up; the benchmark proper lives in
    # the acceptance suite
    env = VecPointReachEnv(WorldParams(), batch=16, seed=21)
    cfg = PpoConfig(num_envs=16, horizon=64, samples_per_iteration=1024,
                    minibatch_size=256, epochs=8, learning_rate=5e-4,
                    kl_target=0.02, entropy_coef=0.02,
                    log_std_bounds=(-4.0, -1.0), lr_bounds=(1e-7, 3e-3),
                    max_iterations=30)
    tr = PpoTrainer(env, cfg, seed=21)
    first = None
    for _ in range(30):
        m = tr.iterate()
        if first is None and np.isfinite(m["ep_task_reward_mean"]):
            first = m["ep_task_reward_mean"]
    assert first is not None
    assert m["ep_task_reward_mean"] > first + 4.0
