"""Decoupled decision-process view of the game and the episode loop.

The leader's environment is partially observable: it sees the current
state's identity and which of its actions reach the goal, but harmful
and ordinary actions are indistinguishable (harmfulness is masked). The
follower sees the full state. Both share the transition function, which
is the obey/disobey operation protocol from ``game_core``.

Rewards here are the same integers as the one-step game payoffs; tests
assert the two tables coincide cell by cell.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .errors import InvalidInput
from .game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    apply_protocol,
    classify_action,
    is_terminal,
)


@dataclass(frozen=True)
class Observation:
    """Leader-visible rendering of a state.

    Carries the state identity and, per available action, whether it is
    goal reaching. No field can hold a harmfulness label.
    """

    state: int
    actions: tuple[tuple[int, bool], ...]  # (action id, goal-reaching flag)

    def key(self) -> str:
        flags = ",".join(f"{a}:{'g' if g else '.'}" for a, g in self.actions)
        return f"s{self.state}[{flags}]"

    @property
    def action_ids(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.actions)


def observe(instance: IdgInstance, s: int) -> Observation:
    """Deterministic masking observation: the leader sees the state identity
    and which actions reach a goal, nothing else. Stochastic observation
    kernels are out of scope."""
    instance._check_state(s)
    acts = []
    for a in instance.actions(s):
        acts.append((a, classify_action(instance, s, a) is ActionClass.GOAL_REACHING))
    return Observation(state=s, actions=tuple(acts))


def leader_reward(instance: IdgInstance, s: int, a_l: int, s_next: int) -> int:
    cls = instance.classes[s_next]
    if cls is StateClass.GOAL:
        return 1
    if cls is StateClass.HARMFUL:
        return -1
    return 0


def follower_reward(
    instance: IdgInstance, s: int, a_l: int, a_f: FollowerAction, s_next: int
) -> int:
    obeyed_succ = instance.successors[s][a_l]
    obeyed_cls = instance.classes[obeyed_succ]
    if a_f is FollowerAction.DISOBEY:
        return 1 if obeyed_cls is StateClass.HARMFUL else -1
    return -1 if instance.classes[s_next] is StateClass.HARMFUL else 0


class Outcome(Enum):
    GOAL = "goal"
    HARM = "harm"
    STEP_BUDGET_EXHAUSTED = "budget"


@dataclass(frozen=True)
class StepRecord:
    turn: int
    state: int
    observation: Observation
    action: int
    decision: FollowerAction
    next_state: int
    leader_reward: int
    follower_reward: int


@dataclass(frozen=True)
class EpisodeLog:
    instance_digest: str
    records: tuple[StepRecord, ...]
    outcome: Outcome
    seed: int
    leader_tag: str
    follower_tag: str


def instance_digest(instance: IdgInstance) -> str:
    h = hashlib.sha256()
    h.update(repr((instance.classes, instance.successors, instance.start)).encode())
    return h.hexdigest()[:16]


def sample_action(rng: random.Random, dist: Mapping[int, object]) -> int:
    """Draw from an action distribution; iteration order is fixed by action
    id so the same seed always yields the same draw."""
    items = sorted(dist.items())
    total = sum(float(w) for _, w in items)
    if total <= 0:
        raise InvalidInput("leader policy produced an empty distribution")
    r = rng.random() * total
    acc = 0.0
    for a, w in items:
        acc += float(w)
        if r < acc:
            return a
    return items[-1][0]


def run_episode(
    instance: IdgInstance,
    leader_policy,
    follower_policy,
    max_steps: int,
    seed: int,
) -> EpisodeLog:
    """One pass of the shared-control loop.

    observe -> leader samples a proposal -> follower decides -> protocol
    applies -> rewards recorded, until a terminal state or the step
    budget. Deterministic given (instance, policies, seed).
    """
    if max_steps < 1:
        raise InvalidInput("max_steps must be >= 1")
    if is_terminal(instance, instance.start):
        raise InvalidInput("start state is terminal")
    rng = random.Random(seed)
    leader_policy.reset()
    follower_policy.reset()
    s = instance.start
    records: list[StepRecord] = []
    outcome = Outcome.STEP_BUDGET_EXHAUSTED
    for turn in range(max_steps):
        obs = observe(instance, s)
        a_l = sample_action(rng, leader_policy.distribution(obs))
        if a_l not in instance.actions(s):
            raise InvalidInput(f"policy proposed unavailable action {a_l} at {s}")
        a_f = follower_policy.decide(s, a_l)
        s_next = apply_protocol(instance, s, a_l, a_f)
        r_l = leader_reward(instance, s, a_l, s_next)
        r_f = follower_reward(instance, s, a_l, a_f, s_next)
        records.append(
            StepRecord(turn, s, obs, a_l, a_f, s_next, r_l, r_f)
        )
        leader_policy.notify(obs, a_l, a_f)
        s = s_next
        if is_terminal(instance, s):
            outcome = (
                Outcome.GOAL
                if instance.classes[s] is StateClass.GOAL
                else Outcome.HARM
            )
            break
    return EpisodeLog(
        instance_digest=instance_digest(instance),
        records=tuple(records),
        outcome=outcome,
        seed=seed,
        leader_tag=leader_policy.tag,
        follower_tag=follower_policy.tag,
    )


def replay_consistent(instance: IdgInstance, log: EpisodeLog) -> bool:
    """Re-run every recorded transition through the protocol and reward
    functions; True iff the log reproduces exactly."""
    s = instance.start
    for rec in log.records:
        if rec.state != s:
            return False
        if rec.observation != observe(instance, s):
            return False
        nxt = apply_protocol(instance, s, rec.action, rec.decision)
        if nxt != rec.next_state:
            return False
        if rec.leader_reward != leader_reward(instance, s, rec.action, nxt):
            return False
        if rec.follower_reward != follower_reward(
            instance, s, rec.action, rec.decision, nxt
        ):
            return False
        s = nxt
    return True


# --- line-delimited serialization -------------------------------------------

_LOG_HEADER = "idglog v1"


def serialize_log(log: EpisodeLog) -> str:
    lines = [_LOG_HEADER]
    lines.append(
        "meta instance={} outcome={} seed={} leader={} follower={} steps={}".format(
            log.instance_digest,
            log.outcome.value,
            log.seed,
            log.leader_tag,
            log.follower_tag,
            len(log.records),
        )
    )
    for r in log.records:
        lines.append(
            "step {} {} {} {} {} {} {} {}".format(
                r.turn,
                r.state,
                r.observation.key(),
                r.action,
                r.decision.value,
                r.next_state,
                r.leader_reward,
                r.follower_reward,
            )
        )
    return "\n".join(lines) + "\n"


def parse_log(text: str) -> EpisodeLog:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _LOG_HEADER:
        raise InvalidInput("not an episode log")
    meta = dict(
        kv.split("=", 1) for kv in lines[1].split()[1:]
    )
    records = []
    for ln in lines[2:]:
        parts = ln.split()
        if parts[0] != "step" or len(parts) != 9:
            raise InvalidInput(f"malformed step line: {ln!r}")
        records.append(
            StepRecord(
                turn=int(parts[1]),
                state=int(parts[2]),
                observation=_parse_obs_key(parts[3]),
                action=int(parts[4]),
                decision=FollowerAction(parts[5]),
                next_state=int(parts[6]),
                leader_reward=int(parts[7]),
                follower_reward=int(parts[8]),
            )
        )
    return EpisodeLog(
        instance_digest=meta["instance"],
        records=tuple(records),
        outcome=Outcome(meta["outcome"]),
        seed=int(meta["seed"]),
        leader_tag=meta["leader"],
        follower_tag=meta["follower"],
    )


def _parse_obs_key(key: str) -> Observation:
    if not key.startswith("s") or "[" not in key or not key.endswith("]"):
        raise InvalidInput(f"malformed observation key {key!r}")
    state_part, flags_part = key[1:-1].split("[", 1)
    actions: list[tuple[int, bool]] = []
    if flags_part:
        for item in flags_part.split(","):
            a, flag = item.split(":")
            actions.append((int(a), flag == "g"))
    return Observation(state=int(state_part), actions=tuple(actions))
