"""Search tree over full configurations.

Nodes store the complete 7-dof configuration. Push edges record the
single held command and the step count, so any edge can be re-simulated
bit-exactly; teleport edges record no command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..sim import geometry as geo


@dataclass
class TreeNode:
    node_id: int
    q: np.ndarray  # (7,) configuration
    parent: int | None
    action: np.ndarray | None  # (4,) held command; None marks a teleport
    steps_from_parent: int

    @property
    def is_teleport(self):
        return self.parent is not None and self.action is None


class Tree:
    def __init__(self, q_root):
        root = TreeNode(0, np.asarray(q_root, dtype=np.float64).copy(),
                        None, None, 0)
        self.nodes = [root]

    def __len__(self):
        return len(self.nodes)

    def add(self, q, parent, action, steps):
        node = TreeNode(len(self.nodes),
                        np.asarray(q, dtype=np.float64).copy(), parent,
                        None if action is None
                        else np.asarray(action, dtype=np.float64).copy(),
                        int(steps))
        self.nodes.append(node)
        return node.node_id

    def path_to(self, node_id):
        """Node ids from the root to node_id, inclusive."""
        path = []
        nid = node_id
        while nid is not None:
            path.append(nid)
            nid = self.nodes[nid].parent
        path.reverse()
        return path


def pose_metric(q_u, target, w_xy, w_theta):
    """Weighted squared distance between box poses. Batched over rows
    when q_u is (N, 3)."""
    q_u = np.asarray(q_u, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    single = q_u.ndim == 1
    if single:
        q_u = q_u[None]
    d = q_u[:, :2] - target[:2]
    dth = geo.wrap_angle(q_u[:, 2] - target[2])
    m = w_xy * np.sum(d * d, axis=1) + w_theta * dth * dth
    return float(m[0]) if single else m


def sample_subgoal(goal, rng, p_goal, bounds_lo, bounds_hi):
    """Goal with probability p_goal, else uniform over the workspace."""
    if rng.uniform() < p_goal:
        return np.asarray(goal, dtype=np.float64).copy()
    return rng.uniform(bounds_lo, bounds_hi)


def nearest_node(tree, target, w_xy, w_theta):
    """Id of the node whose box pose minimizes the metric; ties go to
    the lowest id."""
    poses = np.stack([n.q[4:] for n in tree.nodes])
    m = pose_metric(poses, target, w_xy, w_theta)
    return int(np.argmin(m))
