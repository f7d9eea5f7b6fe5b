from .config import PlannerConfig
from .extend import extend, sample_contact_assignment
from .plan import (extract_demo, goal_reached, grow_tree, plan, refine,
                   resample, shortcut)
from .replay import open_loop_replay
from .trajectory import (Demonstration, PlanTrajectory, read_demo,
                         read_plan, write_demo, write_plan)
from .tree import Tree, TreeNode, nearest_node, pose_metric, sample_subgoal

__all__ = [
    "PlannerConfig", "Tree", "TreeNode", "PlanTrajectory", "Demonstration",
    "plan", "grow_tree", "extend", "refine", "shortcut", "resample",
    "extract_demo", "open_loop_replay", "goal_reached", "nearest_node",
    "pose_metric", "sample_subgoal", "sample_contact_assignment",
    "read_plan", "write_plan", "read_demo", "write_demo",
]
