"""Intelligent disobedience gridworld: game engine, exact solver, tabular
multi-agent RL, and an interactive session service."""

from .errors import GenerationFailure, GuardExceeded, IdgError, InvalidInput
from .game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    StepPayoff,
    apply_protocol,
    build_1idg_tree,
    classify_action,
    is_terminal,
    step_payoff,
)

__all__ = [
    "ActionClass",
    "FollowerAction",
    "GenerationFailure",
    "GuardExceeded",
    "IdgError",
    "IdgInstance",
    "InvalidInput",
    "StateClass",
    "StepPayoff",
    "apply_protocol",
    "build_1idg_tree",
    "classify_action",
    "is_terminal",
    "step_payoff",
]
