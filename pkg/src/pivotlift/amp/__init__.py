"""Adversarial motion-style machinery: transitions, discriminator, rewards."""

from .discriminator import (AmpDiscriminator, combined_reward, lsgan_loss,
                            style_reward)
from .transitions import DemoTransitionSet, TransitionReplay, pair_transitions

__all__ = [
    "AmpDiscriminator",
    "DemoTransitionSet",
    "TransitionReplay",
    "combined_reward",
    "lsgan_loss",
    "pair_transitions",
    "style_reward",
]
