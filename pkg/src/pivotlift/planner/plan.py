"""Tree search, back-chaining, and plan refinement."""

from __future__ import annotations

import time

import numpy as np

from ..errors import PlanningFailure, SolverError
from ..sim import geometry as geo
from ..sim.params import scene_hash
from ..sim.quasidynamic import quasi_dynamic_step
from .config import PlannerConfig
from .extend import extend
from .trajectory import Demonstration, PlanTrajectory
from .tree import Tree, nearest_node, pose_metric, sample_subgoal


def goal_reached(q_u, goal, cfg):
    d = np.asarray(q_u[:2]) - np.asarray(goal[:2])
    return (np.linalg.norm(d) <= cfg.success_trans
            and abs(geo.wrap_angle(q_u[2] - goal[2])) <= cfg.success_rot)


def grow_tree(initial, goal, world, cfg, rng, max_nodes, max_seconds=None):
    """RRT loop. Returns (tree, goal node id or None)."""
    tree = Tree(initial)
    if goal_reached(initial[4:], goal, cfg):
        return tree, 0
    t0 = time.monotonic()
    best = None
    while len(tree) < max_nodes:
        if max_seconds is not None and time.monotonic() - t0 > max_seconds:
            break
        subgoal = sample_subgoal(goal, rng, cfg.p_goal,
                                 cfg.bounds_lo, cfg.bounds_hi)
        nid = nearest_node(tree, subgoal, cfg.weight_xy, cfg.weight_theta)
        result = extend(tree, nid, subgoal, rng, world, cfg)
        if result is None:
            continue
        q_tele, q_push, cmd, steps = result
        tid = tree.add(q_tele, nid, None, 0)
        pid = tree.add(q_push, tid, cmd, steps)
        if goal_reached(q_push[4:], goal, cfg):
            return tree, pid
    return tree, None


def _chain_rows(tree, world, path):
    """Expand a root-to-goal node path into per-step rows by replaying
    each push edge."""
    q_a, q_u, a, tele = [], [], [], []
    root = tree.nodes[path[0]]
    q_a.append(root.q[:4].copy())
    q_u.append(root.q[4:].copy())
    a.append(root.q[:4].copy())
    tele.append(False)
    for nid in path[1:]:
        node = tree.nodes[nid]
        parent_q = tree.nodes[node.parent].q
        if node.is_teleport:
            q_a.append(node.q[:4].copy())
            q_u.append(node.q[4:].copy())
            a.append(node.q[:4].copy())
            tele.append(True)
        else:
            q = parent_q
            for _ in range(node.steps_from_parent):
                q = quasi_dynamic_step(q, node.action, params=world)
                q_a.append(q[:4].copy())
                q_u.append(q[4:].copy())
                a.append(node.action.copy())
                tele.append(False)
    return (np.array(q_a), np.array(q_u), np.array(a),
            np.array(tele, dtype=bool))


def plan(initial, goal, world, cfg=None, seed=0, max_nodes=20000,
         max_seconds=None):
    """Plan from a full configuration to a box-pose goal.

    Returns a PlanTrajectory on the planner step grid. Raises
    PlanningFailure carrying the best achieved distance when the node
    or time budget runs out first.
    """
    cfg = cfg if cfg is not None else PlannerConfig()
    initial = np.asarray(initial, dtype=np.float64)
    rng = np.random.default_rng(seed)
    tree, goal_id = grow_tree(initial, goal, world, cfg, rng,
                              max_nodes, max_seconds)
    if goal_id is None:
        poses = np.stack([n.q[4:] for n in tree.nodes])
        m = pose_metric(poses, goal, cfg.weight_xy, cfg.weight_theta)
        raise PlanningFailure(
            f"budget exhausted after {len(tree)} nodes",
            best_distance=float(np.sqrt(np.min(m))))
    rows = _chain_rows(tree, world, tree.path_to(goal_id))
    return PlanTrajectory(*rows, dt=world.qd_step, seed=seed,
                          scene_hash=scene_hash(world))


# ---------------------------------------------------------------------------
# refinement


def _replay_segment(q_start, command, steps, world):
    q = q_start
    out = []
    for _ in range(steps):
        q = quasi_dynamic_step(q, command, params=world)
        out.append(q)
    return out


def shortcut(plan_t, world, cfg, rng):
    """Random shortcutting within push spans.

    Proposes driving straight from row i to row j's command in fewer
    steps; keeps the replacement only when replay lands on row j's box
    pose within tolerance. Teleport rows are never crossed.
    """
    q_a = [r.copy() for r in plan_t.q_a]
    q_u = [r.copy() for r in plan_t.q_u]
    a = [r.copy() for r in plan_t.a]
    tele = list(plan_t.teleport)
    for _ in range(cfg.shortcut_attempts):
        n = len(q_a)
        if n < 4:
            break
        i = int(rng.integers(0, n - 2))
        j = int(rng.integers(i + 2, min(i + 2 + cfg.shortcut_span, n)))
        if any(tele[i + 1:j + 1]):
            continue
        steps = j - i - 1
        if steps < 1:
            continue
        q_start = np.concatenate([q_a[i], q_u[i]])
        try:
            seg = _replay_segment(q_start, a[j], steps, world)
        except SolverError:
            continue
        land = seg[-1][4:]
        err = pose_metric(land, q_u[j], cfg.weight_xy, cfg.weight_theta)
        if err > cfg.shortcut_tol:
            continue
        repl_qa = [s[:4] for s in seg]
        repl_qu = [s[4:] for s in seg]
        q_a[i + 1:j + 1] = repl_qa
        q_u[i + 1:j + 1] = repl_qu
        a[i + 1:j + 1] = [a[j].copy() for _ in range(steps)]
        tele[i + 1:j + 1] = [False] * steps
    return PlanTrajectory(np.array(q_a), np.array(q_u), np.array(a),
                          np.array(tele, dtype=bool), dt=plan_t.dt,
                          seed=plan_t.seed, scene_hash=plan_t.scene_hash)


def _interp_rows(values, src_t, dst_t):
    values = np.asarray(values)
    out = np.empty((len(dst_t), values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.interp(dst_t, src_t, values[:, k])
    return out


def resample(plan_t, control_period, teleport_duration=2.0):
    """Uniform resampling onto the control grid.

    q_a and q_u interpolate linearly; across a teleport row this
    produces the physically dubious straight-line regrasp the policy is
    expected to repair. A teleport is instantaneous on the planner
    grid, so it is stretched over teleport_duration seconds here; at
    the planner step itself the sweep would be violent enough to knock
    the box across the table, which tells nothing about the plan.
    Held commands stay piecewise constant; rows overlapping a teleport
    interval take the interpolated q_a as their command and keep the
    flag.
    """
    n = len(plan_t)
    if n == 1:
        return PlanTrajectory(plan_t.q_a.copy(), plan_t.q_u.copy(),
                              plan_t.a.copy(), plan_t.teleport.copy(),
                              dt=control_period, seed=plan_t.seed,
                              scene_hash=plan_t.scene_hash)
    durations = np.full(n - 1, plan_t.dt)
    durations[plan_t.teleport[1:]] = teleport_duration
    src_t = np.concatenate([[0.0], np.cumsum(durations)])
    total = float(src_t[-1])
    m = int(np.floor(total / control_period + 1e-9)) + 1
    dst_t = np.minimum(np.arange(m) * control_period, total)

    q_a = _interp_rows(plan_t.q_a, src_t, dst_t)
    # wrap-aware interpolation for the box angle
    theta = np.unwrap(plan_t.q_u[:, 2])
    q_u = _interp_rows(
        np.column_stack([plan_t.q_u[:, :2], theta]), src_t, dst_t)
    q_u[:, 2] = geo.wrap_angle(q_u[:, 2])

    # source interval of each control row; row 0 keeps the first command
    idx = np.clip(np.searchsorted(src_t, dst_t, side="right") - 1, 0, n - 1)
    nxt = np.minimum(idx + 1, n - 1)
    in_tele = plan_t.teleport[idx] | plan_t.teleport[nxt]
    in_tele[dst_t >= total] = plan_t.teleport[-1]
    a = plan_t.a[nxt].copy()
    a[in_tele] = q_a[in_tele]
    return PlanTrajectory(q_a, q_u, a, in_tele, dt=control_period,
                          seed=plan_t.seed, scene_hash=plan_t.scene_hash)


def refine(plan_t, world, cfg=None, seed=0):
    """Shortcut then resample at the policy control period."""
    cfg = cfg if cfg is not None else PlannerConfig()
    rng = np.random.default_rng(seed)
    cut = shortcut(plan_t, world, cfg, rng)
    return resample(cut, cfg.control_period, cfg.teleport_duration)


def extract_demo(plan_t):
    """Robot-only projection carrying the provenance metadata."""
    return Demonstration(plan_t.q_a.copy(), dt=plan_t.dt,
                         seed=plan_t.seed, scene_hash=plan_t.scene_hash)
