"""World-model tests.

Oracles: an independent homogeneous-transform FK chain, closed-form
contact force values, conservation/equilibrium arguments, and the
dynamic engine run to rest as a cross-check on the quasi-dynamic step.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotlift.errors import ConfigError, NumericError, ShapeError, SolverError
from pivotlift.sim import (BatchParams, WorldParams, load_scene, save_scene,
                           scene_hash)
from pivotlift.sim import contacts as C
from pivotlift.sim import engine as E
from pivotlift.sim import geometry as geo
from pivotlift.sim.quasidynamic import quasi_dynamic_step

WP = WorldParams()
ARMS_UP = np.array([np.pi / 2, 0.0, np.pi / 2, 0.0])  # fingertips far above


def bp1():
    return BatchParams(WP, 1)


def fk_oracle(q_a, wp):
    """Homogeneous-transform chain, coded independently of the engine FK."""
    def rot(t):
        return np.array([[np.cos(t), -np.sin(t), 0.0],
                         [np.sin(t), np.cos(t), 0.0],
                         [0.0, 0.0, 1.0]])

    def trans(x, z):
        m = np.eye(3)
        m[0, 2] = x
        m[1, 2] = z
        return m

    l1, l2 = wp.link_lengths
    tips = []
    for arm in range(2):
        sx, sz = wp.shoulders[arm]
        T = trans(sx, sz) @ rot(q_a[2 * arm]) @ trans(l1, 0) \
            @ rot(q_a[2 * arm + 1]) @ trans(l2, 0)
        tips.append(T[:2, 2])
    return np.array(tips)


# ---------------------------------------------------------------------------
# kinematics

def test_fk_stretched_arm():
    tips = geo.fingertips(np.zeros(4), WP)
    l = sum(WP.link_lengths)
    for arm in range(2):
        assert np.allclose(tips[arm], [l, WP.shoulders[arm][1]], atol=1e-15)


def test_fk_right_angle_elbow():
    q = np.array([0.0, np.pi / 2, 0.0, np.pi / 2])
    tips = geo.fingertips(q, WP)
    l1, l2 = WP.link_lengths
    for arm in range(2):
        sx, sz = WP.shoulders[arm]
        assert np.allclose(tips[arm], [sx + l1, sz + l2], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_fk_matches_transform_chain(q_list):
    q_a = np.array(q_list)
    assert np.allclose(geo.fingertips(q_a, WP), fk_oracle(q_a, WP), atol=1e-12)


def test_jacobian_matches_fk_differences():
    rng = np.random.default_rng(0)
    q_a = rng.uniform(-2, 2, 4)
    J = geo.arm_jacobians(q_a, WP)
    h = 1e-7
    for arm in range(2):
        for j in range(2):
            dq = np.zeros(4)
            dq[2 * arm + j] = h
            fd = (geo.fingertips(q_a + dq, WP)[arm]
                  - geo.fingertips(q_a - dq, WP)[arm]) / (2 * h)
            assert np.allclose(J[arm, :, j], fd, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.55), st.floats(0.05, 0.9), st.integers(0, 1))
def test_ik_roundtrip(x, z, arm):
    sol = geo.inverse_kinematics((x, z), arm, WP)
    sx, sz = WP.shoulders[arm]
    r = np.hypot(x - sx, z - sz)
    if r > sum(WP.link_lengths) or r == 0.0:
        assert sol is None
        return
    assert sol is not None
    tip = geo.fingertips(np.array([sol[0], sol[1], 0, 0])[:4]
                         if arm == 0 else np.array([0, 0, sol[0], sol[1]]), WP)
    assert np.allclose(tip[arm], [x, z], atol=1e-9)


def test_ik_out_of_reach_is_none():
    assert geo.inverse_kinematics((5.0, 5.0), 0, WP) is None


def test_ik_prefers_branch_near_reference():
    target = (0.3, 0.75)
    a = geo.inverse_kinematics(target, 0, WP, q_ref=(0.5, -0.5))
    b = geo.inverse_kinematics(target, 0, WP, q_ref=(0.1, 0.5))
    assert a is not None and b is not None
    assert a[1] * b[1] < 0  # opposite elbow branches


def test_wrap_angle_convention():
    assert geo.wrap_angle(np.pi) == np.pi
    assert geo.wrap_angle(-np.pi) == np.pi
    assert abs(geo.wrap_angle(3 * np.pi / 2) + np.pi / 2) < 1e-12
    assert geo.wrap_angle(0.0) == 0.0


# ---------------------------------------------------------------------------
# signed distances

def test_sdf_outside_face():
    phi, n = geo.box_sdf(np.array([0.5, 0.1]), 0.2, 0.13)
    assert abs(phi - 0.3) < 1e-15
    assert np.allclose(n, [1.0, 0.0])
    # fingertip gap subtracts the radius
    assert abs((phi - 0.02) - 0.28) < 1e-15


def test_sdf_center_interior():
    phi, n = geo.box_sdf(np.array([0.0, 0.0]), 0.2, 0.13)
    assert abs(phi - (-0.13)) < 1e-15
    assert abs((phi - 0.02) - (-0.15)) < 1e-15
    assert np.allclose(np.linalg.norm(n), 1.0)


def test_resting_bottom_corners_touch():
    q_u = np.array([0.4, WP.half_extents[1], 0.0])
    corners = geo.box_corners(q_u, *WP.half_extents)
    z = corners[:, 1]
    assert np.allclose(np.sort(z)[:2], 0.0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.6, 0.8), st.floats(-0.4, 0.6))
def test_sdf_normals_unit_and_consistent(px, pz):
    phi, n = geo.box_sdf(np.array([px, pz]), 0.205, 0.13)
    assert abs(np.linalg.norm(n) - 1.0) < 1e-12
    # stepping along the normal increases the distance at unit rate outside
    if phi > 1e-6:
        phi2, _ = geo.box_sdf(np.array([px, pz]) + 1e-5 * n, 0.205, 0.13)
        assert abs((phi2 - phi) - 1e-5) < 1e-9


def test_contact_pair_enumeration_order():
    q = np.zeros((1, 7))
    q[0, :4] = ARMS_UP
    q[0, 4:] = [0.35, 0.13, 0.0]
    cg = C.contact_geometry(q, bp1())
    assert cg["phi"].shape == (1, 10)
    # table pairs see corner heights, wall pairs corner x positions
    corners = geo.box_corners(q[0, 4:], *WP.half_extents)
    assert np.allclose(cg["phi"][0, 2:6], corners[:, 1], atol=1e-12)
    assert np.allclose(cg["phi"][0, 6:10], corners[:, 0], atol=1e-12)
    assert np.allclose(cg["normal"][0, 2:6], [0.0, 1.0])
    assert np.allclose(cg["normal"][0, 6:10], [1.0, 0.0])


# ---------------------------------------------------------------------------
# smoothed normal force

def test_force_value_at_zero_gap():
    f = C.smoothed_normal_force(0.0, 1000.0, 0.01)
    assert abs(f - 10.0 * np.log(2.0)) < 1e-12


def test_force_asymptotes():
    assert C.smoothed_normal_force(1.0, 1e4, 1e-3) < 1e-30
    f = C.smoothed_normal_force(-0.1, 1e4, 1e-3)
    assert abs(f - 1e4 * 0.1) / (1e4 * 0.1) < 1e-10


def test_force_positive_monotone_decreasing():
    phi = np.linspace(-0.05, 0.05, 10001)
    f = C.smoothed_normal_force(phi, 1e4, 1e-3)
    assert np.all(f > 0.0)
    assert np.all(np.diff(f) < 0.0)


def test_force_is_c1_on_grid():
    # |f(phi+d) - f(phi) - f'(phi) d| <= 0.5 max|f''| d^2, f'' max = k/(4s)
    k, s = 1e4, 1e-3
    phi = np.linspace(-0.05, 0.05, 10000)
    d = 1e-6
    lhs = np.abs(C.smoothed_normal_force(phi + d, k, s)
                 - C.smoothed_normal_force(phi, k, s)
                 - C.normal_force_slope(phi, k, s) * d)
    bound = 0.5 * (k / (4.0 * s)) * d * d
    assert np.max(lhs) <= bound * 1.05


def test_force_converges_monotonically_as_smoothing_shrinks():
    phi = -0.02
    k = 1e4
    vals = [C.smoothed_normal_force(phi, k, s)
            for s in (1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 1e-4)]
    # approaches k|phi| from above without ever increasing (the tail
    # saturates to the limit exactly in floats, hence <=)
    assert np.all(np.diff(vals) <= 0.0)
    assert vals[0] > vals[-1]
    assert np.all(np.asarray(vals) >= k * abs(phi))
    assert abs(vals[-1] - k * abs(phi)) / (k * abs(phi)) < 1e-6


# ---------------------------------------------------------------------------
# quasi-dynamic step

def _resting_q(x=0.35, with_arms=None, s=None):
    q = np.zeros(7)
    q[:4] = ARMS_UP if with_arms is None else with_arms
    q[4] = x
    q[5] = E.resting_height(0.0, bp1(), 0, s=s)
    return q


def test_qd_free_space_tracking():
    q = _resting_q(s=WP.smoothing_planner)
    a = ARMS_UP + np.array([0.1, 0.0, 0.0, 0.0])
    q_u0 = q[4:].copy()
    for _ in range(20):
        q = quasi_dynamic_step(q, a, params=WP)
    assert np.max(np.abs(q[:4] - a)) <= 1e-6
    assert np.max(np.abs(q[4:] - q_u0)) <= 1e-4  # box stays put


def test_qd_resting_box_static():
    q = _resting_q(s=WP.smoothing_planner)
    a = ARMS_UP.copy()
    # let the solver find its own equilibrium first, then measure drift
    for _ in range(5):
        q = quasi_dynamic_step(q, a, params=WP)
    q2 = quasi_dynamic_step(q, a, params=WP)
    assert np.max(np.abs(q2[4:] - q[4:])) <= 1e-5


def test_qd_newton_residual_strictly_decreases():
    q = _resting_q()
    q[5] += 0.05  # start away from equilibrium so the solve does work
    trace = []
    quasi_dynamic_step(q, ARMS_UP, params=WP, trace=trace)
    assert len(trace) >= 2
    assert all(b < a for a, b in zip(trace, trace[1:]))


def test_qd_determinism_bit_exact():
    q = _resting_q()
    a = ARMS_UP + 0.05
    r1 = quasi_dynamic_step(q.copy(), a, params=WP)
    r2 = quasi_dynamic_step(q.copy(), a, params=WP)
    assert np.array_equal(r1, r2)


def test_qd_solver_error_carries_residual():
    bad = BatchParams(WorldParams(qd_step=1e9, contact_stiffness=1e12), 1)
    q = _resting_q()
    q[5] = 0.01  # deep penetration, huge step: hopeless solve
    with pytest.raises(SolverError) as ei:
        quasi_dynamic_step(q, ARMS_UP, bp=bad, max_iter=2)
    assert ei.value.residual_norm > 0.0


def _push_commands():
    """IK joint commands sliding the arm-1 fingertip left-to-right at
    box mid-height: a midface push below the tipping threshold."""
    z_tip = WP.half_extents[1]
    xs = np.linspace(0.10, 0.20, 21)
    cmds = []
    ref = (0.0, 0.0)
    for x in xs:
        sol = geo.inverse_kinematics((x, z_tip), 1, WP, q_ref=ref)
        assert sol is not None
        ref = sol
        cmds.append(np.array([ARMS_UP[0], ARMS_UP[1], sol[0], sol[1]]))
    return cmds


def test_qd_push_matches_dynamic_run_to_rest():
    s = WP.smoothing_sim  # same smoothing in both routes
    cmds = _push_commands()
    q = _resting_q()
    q[2:4] = cmds[0][2:4]
    start_x = q[4]

    qd = q.copy()
    for a in cmds:
        for _ in range(2):
            qd = quasi_dynamic_step(qd, a, params=WP, s=s)

    bp = bp1()
    qdyn = q[None].copy()
    v = np.zeros((1, 7))
    frames = int(round(WP.qd_step / WP.dynamic_step))
    for a in cmds:
        for _ in range(2 * frames):
            qdyn, v = E.dynamic_step(qdyn, v, a[None], bp)
    # post-push friction creep decays over a couple of seconds
    qdyn, v, t_settle = E.settle(qdyn, v, cmds[-1][None], bp, max_time=4.0)
    assert t_settle is not None

    # pushed without tipping, and the two models land on the same pose
    assert qd[4] > start_x + 0.03
    assert abs(qd[6]) <= 0.02
    assert abs(qd[4] - qdyn[0, 4]) <= 0.02
    assert abs(qd[5] - qdyn[0, 5]) <= 0.005
    assert abs(qd[6] - qdyn[0, 6]) <= 0.02


def test_qd_penetration_bound():
    # accepted states under nominal loads keep min phi above the linear
    # penalty depth bound -5 m g / k_c
    bound = -5.0 * WP.box_mass * WP.gravity / WP.contact_stiffness
    cmds = _push_commands()
    q = _resting_q()
    q[2:4] = cmds[0][2:4]
    for a in cmds:
        q = quasi_dynamic_step(q, a, params=WP)
        cg = C.contact_geometry(q[None], bp1())
        assert np.min(cg["phi"]) >= bound


# ---------------------------------------------------------------------------
# dynamic step

def test_dynamic_equilibrium_is_fixed_point():
    wp0 = WorldParams(gravity=0.0)
    bp = BatchParams(wp0, 1)
    q = np.zeros((1, 7))
    q[0, :4] = ARMS_UP
    q[0, 4:] = [1.0, 1.0, 0.3]  # far from every surface
    v = np.zeros((1, 7))
    q2, v2 = E.dynamic_step(q, v, q[:, :4].copy(), bp)
    assert np.array_equal(q2, q)
    assert np.array_equal(v2, v)


def test_dynamic_free_fall_velocity():
    bp = bp1()
    q = np.zeros((1, 7))
    q[0, :4] = ARMS_UP
    q[0, 4:] = [1.0, 1.5, 0.0]
    v = np.zeros((1, 7))
    h = WP.dynamic_step
    q2, v2 = E.dynamic_step(q, v, q[:, :4].copy(), bp)
    assert abs(v2[0, 5] + WP.gravity * h) < 1e-12
    assert np.max(np.abs(v2[0, :4])) < 1e-12  # arms are gravity-compensated


def test_dynamic_drop_settles():
    bp = bp1()
    q = np.zeros((1, 7))
    q[0, :4] = ARMS_UP
    q[0, 4:] = [0.35, WP.half_extents[1] + 0.3, 0.0]
    v = np.zeros((1, 7))
    qf, vf, t = E.settle(q, v, q[:, :4].copy(), bp, max_time=2.0, vel_tol=1e-3)
    assert t is not None
    corners = geo.box_corners(qf[0, 4:], *WP.half_extents)
    assert np.min(corners[:, 1]) >= -1e-3
    assert np.max(np.abs(vf)) <= 1e-3
    # and it sits at the predicted static height
    assert abs(qf[0, 5] - E.resting_height(0.0, bp, 0)) < 1e-3


def test_dynamic_determinism_bit_exact():
    bp = bp1()
    rng = np.random.default_rng(1)
    q = np.zeros((2, 7))
    q[:, :4] = ARMS_UP + rng.uniform(-0.3, 0.3, (2, 4))
    q[:, 4] = [0.3, 0.4]
    q[:, 5] = 0.3
    v = rng.normal(0, 0.1, (2, 7))
    a = q[:, :4] + 0.1
    r1 = E.dynamic_step(q.copy(), v.copy(), a, bp)
    r2 = E.dynamic_step(q.copy(), v.copy(), a, bp)
    assert np.array_equal(r1[0], r2[0]) and np.array_equal(r1[1], r2[1])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_dynamic_rejects_nonfinite():
    bp = bp1()
    q = np.zeros((1, 7))
    q[0, 4:] = [0.35, 0.2, 0.0]
    v = np.zeros((1, 7))
    v[0, 5] = 1e300
    with pytest.raises(NumericError):
        E.dynamic_step(q, v, q[:, :4].copy(), bp)


def test_split_q_rejects_bad_width():
    with pytest.raises(ShapeError):
        geo.split_q(np.zeros(6))


# ---------------------------------------------------------------------------
# scene files

def test_scene_roundtrip(tmp_path):
    p = tmp_path / "scene.yaml"
    wp = WorldParams(friction=0.9, box_mass=0.5)
    save_scene(p, wp)
    loaded = load_scene(p)
    assert loaded == wp
    assert scene_hash(loaded) == scene_hash(wp)
    assert scene_hash(loaded) != scene_hash(WorldParams())


def test_scene_rejects_unknown_key(tmp_path):
    p = tmp_path / "scene.yaml"
    p.write_text("gravity: 9.81\nturbo: true\n")
    with pytest.raises(ConfigError):
        load_scene(p)


def test_params_validation():
    with pytest.raises(ConfigError):
        WorldParams(friction=0.0)
    with pytest.raises(ConfigError):
        WorldParams(friction=2.5)
    with pytest.raises(ConfigError):
        WorldParams(box_mass=-1.0)
    with pytest.raises(ConfigError):
        WorldParams(half_extents=(0.2, 0.0))
    WorldParams(gravity=0.0)  # zero gravity allowed for equilibrium checks
