"""Desk-scale plan-guided reinforcement learning for planar pivot-and-lift.

A quasi-dynamic contact planner produces (possibly infeasible) manipulation
plans for a two-arm planar robot; an adversarial imitation reward distilled
from those plans, combined with PPO and domain randomization, turns them
into robust closed-loop policies.
"""

__version__ = "0.1.0"
