"""Core objects of the intelligent disobedience game.

A game instance is a finite set of states, each either a goal, a harmful
state, or an ordinary state. Non-terminal states carry a list of leader
actions with deterministic successors. The follower arbitrates every
proposal: obeying forwards it to the environment, disobeying keeps the
state unchanged. Goal and harmful states are terminal and carry no
actions, so termination is structural.

Everything here is a pure function of immutable data; instances can be
shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

from .errors import InvalidInput


class StateClass(Enum):
    GOAL = "goal"
    HARMFUL = "harmful"
    OTHER = "other"


class ActionClass(Enum):
    GOAL_REACHING = "goal_reaching"
    HARMFUL = "harmful"
    OTHER = "other"


class FollowerAction(Enum):
    OBEY = "obey"
    DISOBEY = "disobey"


class StepPayoff(NamedTuple):
    leader: int
    follower: int


# One entry per leaf of the one-step game tree.
PAYOFF_TABLE: dict[tuple[ActionClass, FollowerAction], StepPayoff] = {
    (ActionClass.GOAL_REACHING, FollowerAction.OBEY): StepPayoff(1, 0),
    (ActionClass.GOAL_REACHING, FollowerAction.DISOBEY): StepPayoff(0, -1),
    (ActionClass.HARMFUL, FollowerAction.OBEY): StepPayoff(-1, -1),
    (ActionClass.HARMFUL, FollowerAction.DISOBEY): StepPayoff(0, 1),
    (ActionClass.OTHER, FollowerAction.OBEY): StepPayoff(0, 0),
    (ActionClass.OTHER, FollowerAction.DISOBEY): StepPayoff(0, -1),
}


@dataclass(frozen=True)
class IdgInstance:
    """A validated finite game.

    ``successors[s]`` lists the successor state of every action available
    at ``s``; action ids are positions in that list. Terminal states
    (goal or harmful class) have empty action lists.

    ``state_labels`` / ``action_labels`` are optional human-readable names
    used by the CLI and service; they carry no semantics.

    ``believed`` optionally holds the leader's view of the same game: a
    structurally aligned instance with harmfulness information removed
    (for gridworlds, the same grid with the lava erased). Policies that
    model the leader's partial knowledge plan on it.
    """

    classes: tuple[StateClass, ...]
    successors: tuple[tuple[int, ...], ...]
    start: int
    state_labels: Optional[tuple[str, ...]] = None
    action_labels: Optional[tuple[tuple[str, ...], ...]] = None
    believed: Optional["IdgInstance"] = None

    @staticmethod
    def build(
        classes: Sequence[StateClass],
        successors: Sequence[Sequence[int]],
        start: int,
        state_labels: Optional[Sequence[str]] = None,
        action_labels: Optional[Sequence[Sequence[str]]] = None,
        believed: Optional["IdgInstance"] = None,
    ) -> "IdgInstance":
        n = len(classes)
        if len(successors) != n:
            raise InvalidInput("classes and successors must have equal length")
        if not (0 <= start < n):
            raise InvalidInput(f"start state {start} out of range")
        for s, (cls, succ) in enumerate(zip(classes, successors)):
            if cls in (StateClass.GOAL, StateClass.HARMFUL):
                if succ:
                    raise InvalidInput(
                        f"terminal state {s} ({cls.value}) must have no actions"
                    )
            else:
                if not succ:
                    raise InvalidInput(f"non-terminal state {s} has no actions")
            for a, t in enumerate(succ):
                if not (0 <= t < n):
                    raise InvalidInput(
                        f"action {a} at state {s} has out-of-range successor {t}"
                    )
        if state_labels is not None and len(state_labels) != n:
            raise InvalidInput("state_labels length mismatch")
        if action_labels is not None:
            if len(action_labels) != n:
                raise InvalidInput("action_labels length mismatch")
            for s in range(n):
                if len(action_labels[s]) != len(successors[s]):
                    raise InvalidInput(f"action_labels mismatch at state {s}")
        return IdgInstance(
            classes=tuple(classes),
            successors=tuple(tuple(s) for s in successors),
            start=start,
            state_labels=tuple(state_labels) if state_labels is not None else None,
            action_labels=(
                tuple(tuple(a) for a in action_labels)
                if action_labels is not None
                else None
            ),
            believed=believed,
        )

    @property
    def n_states(self) -> int:
        return len(self.classes)

    def actions(self, s: int) -> range:
        self._check_state(s)
        return range(len(self.successors[s]))

    def action_label(self, s: int, a: int) -> str:
        if self.action_labels is not None:
            return self.action_labels[s][a]
        return str(a)

    def state_label(self, s: int) -> str:
        if self.state_labels is not None:
            return self.state_labels[s]
        return str(s)

    def _check_state(self, s: int) -> None:
        if not isinstance(s, int) or not (0 <= s < self.n_states):
            raise InvalidInput(f"invalid state id {s!r}")

    def _check_action(self, s: int, a: int) -> None:
        self._check_state(s)
        if not isinstance(a, int) or not (0 <= a < len(self.successors[s])):
            raise InvalidInput(f"invalid action id {a!r} at state {s}")


def is_terminal(instance: IdgInstance, s: int) -> bool:
    """True iff the game has ended at ``s`` (goal reached or leader harmed)."""
    instance._check_state(s)
    return instance.classes[s] in (StateClass.GOAL, StateClass.HARMFUL)


def classify_action(instance: IdgInstance, s: int, a: int) -> ActionClass:
    """Class of action ``a`` at ``s``, derived from its successor's class.

    Never stored: recomputing from the successor map keeps labels from
    going stale.
    """
    instance._check_action(s, a)
    if is_terminal(instance, s):
        raise InvalidInput(f"state {s} is terminal, actions undefined")
    succ_class = instance.classes[instance.successors[s][a]]
    if succ_class is StateClass.GOAL:
        return ActionClass.GOAL_REACHING
    if succ_class is StateClass.HARMFUL:
        return ActionClass.HARMFUL
    return ActionClass.OTHER


def apply_protocol(instance: IdgInstance, s: int, a_l: int, a_f: FollowerAction) -> int:
    """The shared-control arbiter: forward the proposal on obey, hold on disobey."""
    instance._check_action(s, a_l)
    if is_terminal(instance, s):
        raise InvalidInput(f"state {s} is terminal")
    if a_f is FollowerAction.DISOBEY:
        return s
    return instance.successors[s][a_l]


def step_payoff(action_class: ActionClass, a_f: FollowerAction) -> StepPayoff:
    """(leader, follower) payoff for one arbitrated proposal."""
    return PAYOFF_TABLE[(action_class, a_f)]


@dataclass(frozen=True)
class FollowerNode:
    """One leader branch of the one-step tree with the follower's two leaves."""

    action: int
    action_class: ActionClass
    obey: StepPayoff
    disobey: StepPayoff


@dataclass(frozen=True)
class GameTree:
    """Extensive form of the one-step game at a single state.

    ``information_set`` holds the action ids the leader cannot tell apart
    (the harmful and ordinary branches); goal-reaching branches are
    always outside it.
    """

    state: int
    branches: tuple[FollowerNode, ...]
    information_set: frozenset[int]


def build_1idg_tree(instance: IdgInstance, s: int) -> GameTree:
    instance._check_state(s)
    if is_terminal(instance, s):
        raise InvalidInput(f"state {s} is terminal, no tree to build")
    branches = []
    info = set()
    for a in instance.actions(s):
        cls = classify_action(instance, s, a)
        branches.append(
            FollowerNode(
                action=a,
                action_class=cls,
                obey=step_payoff(cls, FollowerAction.OBEY),
                disobey=step_payoff(cls, FollowerAction.DISOBEY),
            )
        )
        if cls is not ActionClass.GOAL_REACHING:
            info.add(a)
    return GameTree(state=s, branches=tuple(branches), information_set=frozenset(info))
