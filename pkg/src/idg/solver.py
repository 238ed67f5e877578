"""Exact analysis of the game.

Covers the one-step equilibria, safety-trap detection as a greatest
fixed point, goal reachability, finite-horizon backward induction, and
a brute-force unilateral-deviation verifier. All payoff arithmetic is
exact (``fractions.Fraction``); floats appear only in the learning
module.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import GuardExceeded, InvalidInput
from .game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    classify_action,
    is_terminal,
    step_payoff,
)
from .mdp import Observation

INF = math.inf


# --- follower policies -------------------------------------------------------


@dataclass(frozen=True)
class FollowerPolicy:
    """Total decision map over (state, proposed action) pairs."""

    decisions: dict
    tag: str

    def decide(self, s: int, a: int) -> FollowerAction:
        return self.decisions[(s, a)]

    def reset(self) -> None:
        pass


def follower_optimal_policy(instance: IdgInstance) -> FollowerPolicy:
    """Veto harmful proposals, obey everything else."""
    decisions = {}
    for s in range(instance.n_states):
        if is_terminal(instance, s):
            continue
        for a in instance.actions(s):
            harmful = classify_action(instance, s, a) is ActionClass.HARMFUL
            decisions[(s, a)] = (
                FollowerAction.DISOBEY if harmful else FollowerAction.OBEY
            )
    return FollowerPolicy(decisions=decisions, tag="optimal")


def always_obey_policy(instance: IdgInstance) -> FollowerPolicy:
    decisions = {}
    for s in range(instance.n_states):
        if is_terminal(instance, s):
            continue
        for a in instance.actions(s):
            decisions[(s, a)] = FollowerAction.OBEY
    return FollowerPolicy(decisions=decisions, tag="always-obey")


# --- reachability ------------------------------------------------------------


def safe_goal_distances(instance: IdgInstance) -> list[float]:
    """Minimal obeyed steps to any goal state, traversing only goal-reaching
    and ordinary actions (harmful proposals get vetoed, so their edges do
    not exist for planning purposes)."""
    dist: list[float] = [INF] * instance.n_states
    queue: deque[int] = deque()
    incoming: dict[int, list[int]] = {s: [] for s in range(instance.n_states)}
    for s in range(instance.n_states):
        if is_terminal(instance, s):
            continue
        for a in instance.actions(s):
            t = instance.successors[s][a]
            if instance.classes[t] is not StateClass.HARMFUL:
                incoming[t].append(s)
    for s in range(instance.n_states):
        if instance.classes[s] is StateClass.GOAL:
            dist[s] = 0
            queue.append(s)
    while queue:
        t = queue.popleft()
        for s in incoming[t]:
            if dist[s] > dist[t] + 1:
                dist[s] = dist[t] + 1
                queue.append(s)
    return dist


def goal_reachable(instance: IdgInstance, s: int) -> tuple[bool, float]:
    """(reachable, minimal obeyed steps); distance is ``math.inf`` when no
    safe path exists."""
    instance._check_state(s)
    d = safe_goal_distances(instance)[s]
    return (d < INF, d)


# --- safety traps ------------------------------------------------------------


@dataclass(frozen=True)
class TrapCertificate:
    no_goal_action: bool
    closure_witnesses: tuple[tuple[int, int], ...]  # (action, successor in trap)


@dataclass(frozen=True)
class TrapSet:
    members: frozenset[int]
    certificates: dict


def detect_safety_traps(instance: IdgInstance) -> TrapSet:
    """Greatest fixed point of the trap conditions: start from every
    non-terminal state without a goal-reaching action, then repeatedly
    drop states with an ordinary action escaping the set. Harmful actions
    need no check because the follower's veto keeps the state in place."""
    current = set()
    for s in range(instance.n_states):
        if is_terminal(instance, s):
            continue
        if not any(
            classify_action(instance, s, a) is ActionClass.GOAL_REACHING
            for a in instance.actions(s)
        ):
            current.add(s)
    changed = True
    while changed:
        changed = False
        for s in list(current):
            for a in instance.actions(s):
                if classify_action(instance, s, a) is ActionClass.OTHER:
                    if instance.successors[s][a] not in current:
                        current.discard(s)
                        changed = True
                        break
    certificates = {}
    for s in current:
        witnesses = tuple(
            (a, instance.successors[s][a])
            for a in instance.actions(s)
            if classify_action(instance, s, a) is ActionClass.OTHER
        )
        certificates[s] = TrapCertificate(no_goal_action=True, closure_witnesses=witnesses)
    return TrapSet(members=frozenset(current), certificates=certificates)


# --- leader policies ---------------------------------------------------------


@dataclass(frozen=True)
class LeaderBeliefState:
    """What the leader conditions its proposal on: the current observation
    and the set of proposals already vetoed there this episode."""

    observation: Observation
    vetoed: frozenset[int]


class TableLeader:
    """Stateless leader playing a fixed per-state mixed strategy."""

    def __init__(self, table: dict, tag: str, instance: IdgInstance):
        self.table = table
        self.tag = tag
        self.instance = instance

    def reset(self) -> None:
        pass

    def distribution(self, obs: Observation) -> dict:
        dist = self.table.get(obs.state)
        if dist is None:
            acts = obs.action_ids
            dist = {a: Fraction(1, len(acts)) for a in acts}
        return dist

    def notify(self, obs: Observation, action: int, decision: FollowerAction) -> None:
        pass


def goal_directed_leader_table(instance: IdgInstance) -> dict:
    """Per-state uniform mix over safe actions that minimize the true
    distance to goal; uniform over everything where the goal is out of
    reach (nothing better exists there)."""
    dist = safe_goal_distances(instance)
    table = {}
    for s in range(instance.n_states):
        if is_terminal(instance, s):
            continue
        acts = list(instance.actions(s))
        best = []
        if dist[s] < INF:
            for a in acts:
                t = instance.successors[s][a]
                if (
                    instance.classes[t] is not StateClass.HARMFUL
                    and dist[t] + 1 == dist[s]
                ):
                    best.append(a)
        if not best:
            best = acts
        table[s] = {a: Fraction(1, len(best)) for a in best}
    return table


def fully_informed_leader(instance: IdgInstance) -> TableLeader:
    return TableLeader(goal_directed_leader_table(instance), "informed", instance)


def mask_labels(instance: IdgInstance) -> IdgInstance:
    """Fallback leader view for instances without an attached one: harmful
    states are relabeled ordinary and given a self-loop so the structure
    stays valid; they remain dead ends for planning."""
    classes = list(instance.classes)
    successors = [list(s) for s in instance.successors]
    for s in range(instance.n_states):
        if classes[s] is StateClass.HARMFUL:
            classes[s] = StateClass.OTHER
            if not successors[s]:
                successors[s] = [s]
    return IdgInstance.build(classes, successors, instance.start)


class ReplanningLeader:
    """Leader under the masking observation, with veto memory.

    Plans shortest paths in its believed graph (the instance with
    harmfulness erased), never proposes an action already vetoed at the
    current observation, and replans after every veto. If every action
    at an observation has been vetoed the memory there is cleared and
    exploration restarts, which prevents deadlock when the beliefs are
    wrong everywhere.
    """

    tag = "replanning"

    def __init__(self, instance: IdgInstance, believed: Optional[IdgInstance] = None):
        self.instance = instance
        self.believed = believed or instance.believed or mask_labels(instance)
        self.vetoed: dict[int, set[int]] = {}

    def reset(self) -> None:
        self.vetoed = {}

    def belief(self, obs: Observation) -> LeaderBeliefState:
        return LeaderBeliefState(
            observation=obs, vetoed=frozenset(self.vetoed.get(obs.state, ()))
        )

    def distribution(self, obs: Observation) -> dict:
        s = obs.state
        avail = list(obs.action_ids)
        vetoed = self.vetoed.get(s, set())
        candidates = [a for a in avail if a not in vetoed]
        if not candidates:
            self.vetoed[s] = set()
            candidates = avail
        dist = self._believed_distances()
        scored = []
        for a in candidates:
            if a >= len(self.believed.successors[s]):
                raise InvalidInput(
                    f"believed instance misaligned at state {s}, action {a}"
                )
            scored.append((1 + dist[self.believed.successors[s][a]], a))
        finite = [item for item in scored if item[0] < INF]
        if finite:
            best_d = min(d for d, _ in finite)
            best = [a for d, a in finite if d == best_d]
        else:
            best = candidates
        return {a: Fraction(1, len(best)) for a in best}

    def notify(self, obs: Observation, action: int, decision: FollowerAction) -> None:
        if decision is FollowerAction.DISOBEY:
            self.vetoed.setdefault(obs.state, set()).add(action)

    def _believed_distances(self) -> list[float]:
        b = self.believed
        dist: list[float] = [INF] * b.n_states
        queue: deque[int] = deque()
        for s in range(b.n_states):
            if b.classes[s] is StateClass.GOAL:
                dist[s] = 0
                queue.append(s)
        incoming: dict[int, list[int]] = {s: [] for s in range(b.n_states)}
        for s in range(b.n_states):
            vetoed = self.vetoed.get(s, set())
            for a, t in enumerate(b.successors[s]):
                if a in vetoed:
                    continue
                incoming[t].append(s)
        while queue:
            t = queue.popleft()
            for s in incoming[t]:
                if dist[s] > dist[t] + 1:
                    dist[s] = dist[t] + 1
                    queue.append(s)
        return dist


def leader_replanning_policy(
    instance: IdgInstance, believed: Optional[IdgInstance] = None
) -> ReplanningLeader:
    return ReplanningLeader(instance, believed)


# --- strategy profiles and exact evaluation ----------------------------------


@dataclass(frozen=True)
class StrategyProfile:
    leader_table: dict  # state -> {action: Fraction}
    follower: FollowerPolicy
    leader_tag: str = "goal-directed"

    def leader_distribution(self, instance: IdgInstance, s: int) -> dict:
        dist = self.leader_table.get(s)
        if dist is None:
            acts = list(instance.actions(s))
            dist = {a: Fraction(1, len(acts)) for a in acts}
        return dist


def _profile_value(
    instance: IdgInstance,
    profile: StrategyProfile,
    s: int,
    k: int,
    memo: dict,
) -> tuple[Fraction, Fraction]:
    """Exact expected (leader, follower) payoff from (s, k steps left)
    when both sides play the profile."""
    if k == 0 or is_terminal(instance, s):
        return (Fraction(0), Fraction(0))
    key = (s, k)
    if key in memo:
        return memo[key]
    v_l = Fraction(0)
    v_f = Fraction(0)
    for a, p in sorted(profile.leader_distribution(instance, s).items()):
        cls = classify_action(instance, s, a)
        f = profile.follower.decide(s, a)
        pay = step_payoff(cls, f)
        nxt = instance.successors[s][a] if f is FollowerAction.OBEY else s
        cont = _profile_value(instance, profile, nxt, k - 1, memo)
        v_l += p * (pay.leader + cont[0])
        v_f += p * (pay.follower + cont[1])
    memo[key] = (v_l, v_f)
    return memo[key]


# --- deviation verification --------------------------------------------------


@dataclass(frozen=True)
class DeviationEntry:
    player: str  # "leader" | "follower"
    state: int
    steps_remaining: int
    description: str
    delta: Fraction


@dataclass(frozen=True)
class DeviationReport:
    certified: bool
    entries: tuple[DeviationEntry, ...]


def verify_equilibrium(
    instance: IdgInstance,
    profile: StrategyProfile,
    horizon: int,
    root: Optional[int] = None,
    max_states: int = 20,
    max_horizon: int = 8,
) -> DeviationReport:
    """One-shot deviation check: at every decision point reachable under
    the profile, try every single-action leader deviation and every
    flipped follower decision, reverting to the profile afterwards.
    Certified iff no deviation gains its player anything."""
    if instance.n_states > max_states:
        raise GuardExceeded(
            f"instance has {instance.n_states} states, guard max_states={max_states}"
        )
    if horizon > max_horizon:
        raise GuardExceeded(f"horizon {horizon} exceeds guard max_horizon={max_horizon}")
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    if root is None:
        root = instance.start
    if is_terminal(instance, root):
        raise InvalidInput(f"root state {root} is terminal")

    memo: dict = {}

    def value(s: int, k: int) -> tuple[Fraction, Fraction]:
        return _profile_value(instance, profile, s, k, memo)

    # Decision points reachable under the profile's support.
    reachable: set[tuple[int, int]] = set()
    frontier = {(root, horizon)}
    while frontier:
        nxt: set[tuple[int, int]] = set()
        for s, k in frontier:
            if (s, k) in reachable or k == 0 or is_terminal(instance, s):
                continue
            reachable.add((s, k))
            for a in profile.leader_distribution(instance, s):
                f = profile.follower.decide(s, a)
                t = instance.successors[s][a] if f is FollowerAction.OBEY else s
                nxt.add((t, k - 1))
        frontier = nxt

    entries: list[DeviationEntry] = []
    for s, k in sorted(reachable):
        base_l, base_f = value(s, k)
        # Leader: shift all support to one alternative action for this turn.
        for a in instance.actions(s):
            cls = classify_action(instance, s, a)
            f = profile.follower.decide(s, a)
            pay = step_payoff(cls, f)
            t = instance.successors[s][a] if f is FollowerAction.OBEY else s
            dev_l = pay.leader + value(t, k - 1)[0]
            entries.append(
                DeviationEntry(
                    player="leader",
                    state=s,
                    steps_remaining=k,
                    description=f"propose {instance.action_label(s, a)} only",
                    delta=Fraction(dev_l) - base_l,
                )
            )
        # Follower: flip one decision at one proposed action for this turn.
        for a, p in sorted(profile.leader_distribution(instance, s).items()):
            if p == 0:
                continue
            cls = classify_action(instance, s, a)
            f = profile.follower.decide(s, a)
            flip = (
                FollowerAction.DISOBEY
                if f is FollowerAction.OBEY
                else FollowerAction.OBEY
            )
            orig_t = instance.successors[s][a] if f is FollowerAction.OBEY else s
            flip_t = instance.successors[s][a] if flip is FollowerAction.OBEY else s
            orig_val = step_payoff(cls, f).follower + value(orig_t, k - 1)[1]
            flip_val = step_payoff(cls, flip).follower + value(flip_t, k - 1)[1]
            entries.append(
                DeviationEntry(
                    player="follower",
                    state=s,
                    steps_remaining=k,
                    description=(
                        f"{flip.value} proposal {instance.action_label(s, a)}"
                    ),
                    delta=Fraction(flip_val) - Fraction(orig_val),
                )
            )
    certified = all(e.delta <= 0 for e in entries)
    return DeviationReport(certified=certified, entries=tuple(entries))


# --- one-step equilibria -----------------------------------------------------


@dataclass(frozen=True)
class EquilibriumReport:
    state: int
    case: str  # "GoalAvailable" | "NoGoalAction"
    leader_distribution: dict
    follower_decisions: dict
    expected_leader: Fraction
    expected_follower: Fraction
    deviations: DeviationReport


def solve_1idg(instance: IdgInstance, s: int) -> EquilibriumReport:
    """The one-step equilibrium at ``s``: mix uniformly over goal-reaching
    actions when any exist (payoffs (1, 0)); otherwise any mix yields the
    leader exactly 0 and we report the uniform one."""
    instance._check_state(s)
    if is_terminal(instance, s):
        raise InvalidInput(f"state {s} is terminal")
    follower = follower_optimal_policy(instance)
    goal_actions = [
        a
        for a in instance.actions(s)
        if classify_action(instance, s, a) is ActionClass.GOAL_REACHING
    ]
    if goal_actions:
        case = "GoalAvailable"
        support = goal_actions
    else:
        case = "NoGoalAction"
        support = list(instance.actions(s))
    dist = {a: Fraction(1, len(support)) for a in support}
    exp_l = Fraction(0)
    exp_f = Fraction(0)
    for a, p in dist.items():
        pay = step_payoff(
            classify_action(instance, s, a), follower.decide(s, a)
        )
        exp_l += p * pay.leader
        exp_f += p * pay.follower
    profile = StrategyProfile(leader_table={s: dist}, follower=follower)
    deviations = verify_equilibrium(
        instance, profile, horizon=1, root=s,
        max_states=max(20, instance.n_states),
    )
    decisions = {a: follower.decide(s, a) for a in instance.actions(s)}
    return EquilibriumReport(
        state=s,
        case=case,
        leader_distribution=dist,
        follower_decisions=decisions,
        expected_leader=exp_l,
        expected_follower=exp_f,
        deviations=deviations,
    )


# --- finite-horizon backward induction ---------------------------------------


def solve_n_idg(
    instance: IdgInstance, horizon: int
) -> tuple[StrategyProfile, dict]:
    """Backward induction with the leader committed to goal-directed
    proposals and the follower best-responding at every node. Returns the
    (goal-directed, veto-optimal) profile and the full value table
    ``(state, steps_remaining) -> (leader, follower)``."""
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    table = goal_directed_leader_table(instance)
    follower = follower_optimal_policy(instance)
    values: dict = {}
    for s in range(instance.n_states):
        values[(s, 0)] = (Fraction(0), Fraction(0))
    for k in range(1, horizon + 1):
        for s in range(instance.n_states):
            if is_terminal(instance, s):
                values[(s, k)] = (Fraction(0), Fraction(0))
                continue
            v_l = Fraction(0)
            v_f = Fraction(0)
            for a, p in sorted(table[s].items()):
                cls = classify_action(instance, s, a)
                succ = instance.successors[s][a]
                # Follower best response, ties broken toward obeying.
                best = None
                for f in (FollowerAction.OBEY, FollowerAction.DISOBEY):
                    pay = step_payoff(cls, f)
                    nxt = succ if f is FollowerAction.OBEY else s
                    cont = values[(nxt, k - 1)]
                    cand = (pay.follower + cont[1], pay.leader + cont[0])
                    if best is None or cand[0] > best[0]:
                        best = cand
                v_f += p * best[0]
                v_l += p * best[1]
            values[(s, k)] = (v_l, v_f)
    profile = StrategyProfile(leader_table=table, follower=follower)
    return profile, values


# --- text reports ------------------------------------------------------------


def render_trap_report(instance: IdgInstance, traps: TrapSet) -> str:
    lines = [f"safety traps: {len(traps.members)} state(s)"]
    for s in sorted(traps.members):
        cert = traps.certificates[s]
        wit = ", ".join(
            f"{instance.action_label(s, a)}->{instance.state_label(t)}"
            for a, t in cert.closure_witnesses
        )
        lines.append(
            f"  {instance.state_label(s)}: no goal action; "
            f"closure witnesses: [{wit or 'none'}]"
        )
    return "\n".join(lines) + "\n"


def render_equilibrium_report(instance: IdgInstance, rep: EquilibriumReport) -> str:
    lines = [
        f"state {instance.state_label(rep.state)}: case {rep.case}",
        f"expected payoffs: leader={rep.expected_leader} follower={rep.expected_follower}",
        "leader strategy:",
    ]
    for a, p in sorted(rep.leader_distribution.items()):
        lines.append(f"  {instance.action_label(rep.state, a)}: {p}")
    lines.append("follower decisions:")
    for a, d in sorted(rep.follower_decisions.items()):
        lines.append(f"  {instance.action_label(rep.state, a)}: {d.value}")
    lines.append(
        "deviation check: "
        + ("certified" if rep.deviations.certified else "NOT certified")
    )
    for e in rep.deviations.entries:
        lines.append(
            f"  [{e.player}] k={e.steps_remaining} "
            f"{instance.state_label(e.state)}: {e.description}: delta {e.delta}"
        )
    return "\n".join(lines) + "\n"
