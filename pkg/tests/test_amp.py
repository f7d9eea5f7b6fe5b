"""Adversarial-imitation module: loss oracles, rewards, replay, training."""

import numpy as np
import pytest

from pivotlift.amp import (AmpDiscriminator, DemoTransitionSet,
                           TransitionReplay, combined_reward, lsgan_loss,
                           pair_transitions, style_reward)
from pivotlift.amp.transitions import STD_FLOOR
from pivotlift.errors import ConfigError, NumericError, ShapeError, StateError
from pivotlift.nn import Tensor


# ---------------------------------------------------------------- loss oracle

def test_loss_hand_summed():
    # All inputs exactly representable, so every term is exact:
    # demo: mean(0.5^2, 0.5^2) = 0.25
    # policy: mean(0.5^2, 1.0^2) = 0.625
    # penalty: 10 * mean(0.25, 0.75) = 5.0
    d_demo = Tensor(np.array([1.5, 0.5]))
    d_policy = Tensor(np.array([-0.5, -2.0]))
    grad_sq = Tensor(np.array([0.25, 0.75]))
    loss = lsgan_loss(d_demo, d_policy, grad_sq)
    assert loss.data == 0.25 + 0.625 + 5.0


def test_loss_perfect_discriminator_is_zero():
    d_demo = Tensor(np.ones(16))
    d_policy = Tensor(-np.ones(16))
    grad_sq = Tensor(np.zeros(16))
    assert lsgan_loss(d_demo, d_policy, grad_sq).data == 0.0


def test_loss_blind_discriminator_is_two():
    zeros = Tensor(np.zeros(8))
    assert lsgan_loss(zeros, zeros, Tensor(np.zeros(8))).data == 2.0


def test_loss_penalty_weight_scales_linearly():
    zeros = Tensor(np.zeros(4))
    gsq = Tensor(np.full(4, 0.5))
    base = lsgan_loss(zeros, zeros, gsq, gp_weight=0.0).data
    assert lsgan_loss(zeros, zeros, gsq, gp_weight=4.0).data == base + 2.0


# -------------------------------------------------------------- style reward

def test_style_reward_anchor_values():
    d = np.array([1.0, -1.0, 0.0, 3.0, 5.0])
    r = style_reward(d)
    assert r[0] == 1.0      # on-target score
    assert r[1] == 0.0      # confidently fake
    assert r[2] == 0.75
    assert r[3] == 0.0      # overshoot clamps too
    assert r[4] == 0.0


def test_style_reward_range_and_symmetry():
    d = np.linspace(-6.0, 8.0, 1001)
    r = style_reward(d)
    assert np.all(r >= 0.0) and np.all(r <= 1.0)
    # quadratic bowl centered at d = 1
    np.testing.assert_array_equal(style_reward(1.0 + d),
                                  style_reward(1.0 - d))


def test_combined_reward_blend():
    task = np.array([1.0, 0.5])
    style = np.array([0.0, 1.0])
    out = combined_reward(task, style, 0.9)
    np.testing.assert_allclose(out, [0.9, 0.55], rtol=0, atol=1e-15)


def test_combined_reward_endpoints_pass_through_untouched():
    task = np.array([0.3, 0.7])
    style = np.array([0.1, 0.2])
    assert combined_reward(task, style, 1.0) is task
    assert combined_reward(task, style, 0.0) is style


# ---------------------------------------------------------------- transitions

def test_pair_transitions_layout():
    q = np.arange(12.0).reshape(3, 4)
    t = pair_transitions(q)
    assert t.shape == (2, 8)
    np.testing.assert_array_equal(t[0], np.concatenate([q[0], q[1]]))
    np.testing.assert_array_equal(t[1], np.concatenate([q[1], q[2]]))


def test_pair_transitions_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        pair_transitions(np.zeros((5, 3)))
    with pytest.raises(ShapeError):
        pair_transitions(np.zeros((1, 4)))


def test_demo_stats_are_frozen_and_normalizing():
    rng = np.random.default_rng(3)
    q = np.cumsum(rng.normal(size=(200, 4)) * 0.1, axis=0)
    demo = DemoTransitionSet(q)
    z = demo.normalize(demo.transitions)
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)
    mean_before = demo.mean.copy()
    demo.normalize(rng.normal(size=(50, 8)))
    np.testing.assert_array_equal(demo.mean, mean_before)


def test_demo_constant_dimension_uses_std_floor():
    q = np.zeros((10, 4))
    q[:, 0] = np.linspace(0.0, 1.0, 10)  # joints 1..3 never move
    demo = DemoTransitionSet(q)
    assert np.all(demo.std[[1, 2, 3, 5, 6, 7]] == STD_FLOOR)
    z = demo.normalize(demo.transitions)
    assert np.all(np.isfinite(z))
    assert np.all(z[:, [1, 2, 3, 5, 6, 7]] == 0.0)


# --------------------------------------------------------------------- replay

def test_replay_rejects_zero_capacity():
    with pytest.raises(ConfigError):
        TransitionReplay(0)


def test_replay_empty_sample_raises():
    with pytest.raises(StateError):
        TransitionReplay(10).sample(1, np.random.default_rng(0))


def test_replay_ring_keeps_newest():
    buf = TransitionReplay(4)
    rows = np.arange(6.0)[:, None] * np.ones((1, 8))
    buf.push(rows)
    assert len(buf) == 4
    held = sorted(buf.buf[:, 0].tolist())
    assert held == [2.0, 3.0, 4.0, 5.0]


def test_replay_sampling_is_uniform():
    buf = TransitionReplay(100)
    buf.push(np.arange(100.0)[:, None] * np.ones((1, 8)))
    rng = np.random.default_rng(11)
    draws = buf.sample(5000, rng)[:, 0].astype(int)
    counts = np.bincount(draws, minlength=100)
    # expected 50 per bin, sd ~ 7; generous envelope
    assert counts.min() >= 20 and counts.max() <= 100


def test_replay_oversized_push_keeps_tail():
    buf = TransitionReplay(3)
    buf.push(np.arange(10.0)[:, None] * np.ones((1, 8)))
    assert sorted(buf.buf[:, 0].tolist()) == [7.0, 8.0, 9.0]


# -------------------------------------------------------- discriminator train

def _fd_input_grad_sq(net, x, h=1e-6):
    """Finite-difference squared input-gradient norm, per sample."""
    out = np.zeros(x.shape[0])
    for i in range(x.shape[0]):
        g = np.zeros(x.shape[1])
        for j in range(x.shape[1]):
            xp, xm = x[i].copy(), x[i].copy()
            xp[j] += h
            xm[j] -= h
            g[j] = (net.forward_np(xp[None])[0, 0]
                    - net.forward_np(xm[None])[0, 0]) / (2 * h)
        out[i] = np.dot(g, g)
    return out


def test_update_loss_matches_numpy_reconstruction():
    rng = np.random.default_rng(5)
    disc = AmpDiscriminator(rng, hidden=(16, 12))
    demo = rng.normal(size=(6, 8))
    pol = rng.normal(size=(6, 8))
    d_demo = disc.net.forward_np(demo)[:, 0]
    d_pol = disc.net.forward_np(pol)[:, 0]
    expected = (np.mean((d_demo - 1.0) ** 2)
                + np.mean((d_pol + 1.0) ** 2)
                + 10.0 * np.mean(_fd_input_grad_sq(disc.net, demo)))
    loss, _, _ = disc.update(demo, pol)
    assert abs(loss - expected) <= 1e-7 * max(1.0, abs(expected))


def test_update_accuracies_count_score_signs():
    rng = np.random.default_rng(9)
    disc = AmpDiscriminator(rng, hidden=(8,))
    demo = rng.normal(size=(32, 8))
    pol = rng.normal(size=(32, 8))
    _, demo_acc, pol_acc = disc.update(demo, pol)
    # recompute against the post-step network
    assert demo_acc == np.mean(disc.net.forward_np(demo)[:, 0] > 0.0)
    assert pol_acc == np.mean(disc.net.forward_np(pol)[:, 0] < 0.0)


def test_update_nonfinite_loss_leaves_parameters_untouched():
    rng = np.random.default_rng(2)
    disc = AmpDiscriminator(rng, hidden=(8,))
    disc.net.parameters[0].data[0, 0] = np.inf
    before = [p.data.copy() for p in disc.net.parameters]
    with pytest.raises(NumericError):
        disc.update(np.ones((4, 8)), np.ones((4, 8)))
    for p, b in zip(disc.net.parameters, before):
        np.testing.assert_array_equal(p.data, b)


def test_training_separates_clean_from_noise():
    rng = np.random.default_rng(17)
    t = np.linspace(0.0, 6.0, 400)
    q = np.stack([np.sin(0.7 * t), np.cos(0.9 * t),
                  0.5 * np.sin(1.3 * t), 0.3 * t], axis=1)
    demo = DemoTransitionSet(q)
    disc = AmpDiscriminator(rng, lr=1e-3)
    fake_raw = rng.uniform(-2.0, 2.0, size=(4000, 8))
    for _ in range(40):
        db = demo.sample_normalized(128, rng)
        fb = demo.normalize(fake_raw[rng.integers(0, 4000, size=128)])
        loss, demo_acc, pol_acc = disc.update(db, fb)
    assert demo_acc >= 0.95 and pol_acc >= 0.95
    # style reward now favors demonstration transitions
    r_demo = style_reward(disc.scores(demo.sample_normalized(256, rng)))
    r_fake = style_reward(disc.scores(demo.normalize(fake_raw[:256])))
    assert r_demo.mean() > r_fake.mean() + 0.3


def test_identical_distributions_stay_near_chance():
    rng = np.random.default_rng(23)
    q = np.cumsum(rng.normal(size=(600, 4)) * 0.05, axis=0)
    demo = DemoTransitionSet(q)
    disc = AmpDiscriminator(rng, lr=1e-3)
    accs = []
    for _ in range(40):
        db = demo.sample_normalized(128, rng)
        fb = demo.sample_normalized(128, rng)
        _, demo_acc, pol_acc = disc.update(db, fb)
        accs.append(0.5 * (demo_acc + pol_acc))
    assert abs(np.mean(accs[-10:]) - 0.5) <= 0.1


def test_update_epoch_feeds_replay_and_averages():
    rng = np.random.default_rng(31)
    q = np.cumsum(rng.normal(size=(80, 4)) * 0.1, axis=0)
    demo = DemoTransitionSet(q)
    disc = AmpDiscriminator(rng, hidden=(16, 8))
    replay = TransitionReplay(1000)
    rollout = rng.normal(size=(300, 8))
    loss, demo_acc, pol_acc = disc.update_epoch(demo, replay, rollout, rng)
    assert len(replay) == 300
    assert np.isfinite(loss)
    assert 0.0 <= demo_acc <= 1.0 and 0.0 <= pol_acc <= 1.0


def test_update_epoch_rejects_empty_rollout():
    rng = np.random.default_rng(0)
    demo = DemoTransitionSet(np.cumsum(np.ones((5, 4)), axis=0))
    disc = AmpDiscriminator(rng, hidden=(8,))
    with pytest.raises(StateError):
        disc.update_epoch(demo, TransitionReplay(10),
                          np.empty((0, 8)), rng)


def test_checkpoint_roundtrip_restores_scores():
    rng = np.random.default_rng(41)
    disc = AmpDiscriminator(rng, hidden=(16, 8))
    x = rng.normal(size=(8, 8))
    disc.update(x, -x)
    state = disc.state_arrays()
    other = AmpDiscriminator(np.random.default_rng(99), hidden=(16, 8))
    other.load_state_arrays(state)
    np.testing.assert_array_equal(other.scores(x), disc.scores(x))
