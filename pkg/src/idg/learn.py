"""Tabular independent Q-learning for the leader/follower pair.

Both agents learn simultaneously from their own reward signal, each
treating the other as part of the environment. The leader's table is
keyed on observations (it never sees harmfulness); the follower's on
(state, proposed action). The follower's one-step update is delayed by
one turn because its successor "state" includes the leader's next
proposal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidInput
from .game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    classify_action,
    is_terminal,
)
from .mdp import Observation, Outcome, observe, run_episode


@dataclass
class TrainConfig:
    episodes: int
    max_steps: Optional[int] = None  # default 10 * |S|
    alpha: float = 0.1
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.8
    seed: int = 0

    def validate(self) -> None:
        if self.episodes < 1:
            raise InvalidInput("episodes must be >= 1")
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidInput("alpha must be in (0,1]")
        if not (0.0 < self.gamma < 1.0):
            raise InvalidInput("gamma must be in (0,1)")
        for eps in (self.eps_start, self.eps_end):
            if not (0.0 <= eps <= 1.0):
                raise InvalidInput("exploration rates must be in [0,1]")
        if not (0.0 < self.eps_decay_fraction <= 1.0):
            raise InvalidInput("eps_decay_fraction must be in (0,1]")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidInput("max_steps must be >= 1")


class LeaderQTable:
    """Action values keyed on observation keys, never raw states, so the
    leader cannot exploit hidden harmfulness labels."""

    def __init__(self):
        self.rows: dict[str, dict[int, float]] = {}
        self.visit_rows: dict[str, dict[int, int]] = {}

    def value(self, obs: Observation, a: int) -> float:
        return self.rows[obs.key()][a]

    def visits(self, obs: Observation, a: int) -> int:
        return self.visit_rows[obs.key()][a]

    def greedy(self, obs: Observation) -> int:
        row = self.rows[obs.key()]
        best = None
        for a in sorted(row):  # lowest action id wins ties
            if best is None or row[a] > row[best]:
                best = a
        return best

    def as_policy(self) -> "LearnedLeader":
        return LearnedLeader(self)


class LearnedLeader:
    tag = "learned"

    def __init__(self, table: LeaderQTable):
        self.table = table

    def reset(self) -> None:
        pass

    def distribution(self, obs: Observation) -> dict:
        return {self.table.greedy(obs): 1}

    def notify(self, obs, action, decision) -> None:
        pass


class FollowerQTable:
    """Values for (state, proposal, obey/disobey) triples."""

    def __init__(self):
        self.rows: dict[tuple[int, int], list[float]] = {}
        self.visit_rows: dict[tuple[int, int], list[int]] = {}

    def value(self, s: int, a: int, f: FollowerAction) -> float:
        return self.rows[(s, a)][0 if f is FollowerAction.OBEY else 1]

    def visits(self, s: int, a: int) -> int:
        return sum(self.visit_rows[(s, a)])

    def greedy(self, s: int, a: int) -> FollowerAction:
        q = self.rows[(s, a)]
        return FollowerAction.OBEY if q[0] >= q[1] else FollowerAction.DISOBEY

    def as_policy(self) -> "LearnedFollower":
        return LearnedFollower(self)


class LearnedFollower:
    tag = "learned"

    def __init__(self, table: FollowerQTable):
        self.table = table

    def reset(self) -> None:
        pass

    def decide(self, s: int, a: int) -> FollowerAction:
        return self.table.greedy(s, a)


@dataclass(frozen=True)
class EpisodeCurvePoint:
    episode: int
    leader_return: int
    follower_return: int
    outcome: Outcome
    steps: int


def train(
    instance: IdgInstance, config: TrainConfig
) -> tuple[LeaderQTable, FollowerQTable, list[EpisodeCurvePoint]]:
    config.validate()
    n = instance.n_states
    max_steps = config.max_steps if config.max_steps is not None else 10 * n
    rng = random.Random(config.seed)

    # Flat per-state arrays for the hot loop.
    succ = [list(instance.successors[s]) for s in range(n)]
    n_acts = [len(succ[s]) for s in range(n)]
    terminal = [is_terminal(instance, s) for s in range(n)]
    harmful_a = [
        [instance.classes[t] is StateClass.HARMFUL for t in succ[s]] for s in range(n)
    ]
    goal_a = [
        [instance.classes[t] is StateClass.GOAL for t in succ[s]] for s in range(n)
    ]
    term_a = [[terminal[t] for t in succ[s]] for s in range(n)]
    r_obey_l = [
        [1 if goal_a[s][a] else (-1 if harmful_a[s][a] else 0) for a in range(n_acts[s])]
        for s in range(n)
    ]

    ql = [[0.0] * n_acts[s] for s in range(n)]
    vl = [[0] * n_acts[s] for s in range(n)]
    qf = {(s, a): [0.0, 0.0] for s in range(n) for a in range(n_acts[s])}
    vf = {(s, a): [0, 0] for s in range(n) for a in range(n_acts[s])}

    alpha = config.alpha
    gamma = config.gamma
    decay_eps = max(1, int(config.episodes * config.eps_decay_fraction))
    curves: list[EpisodeCurvePoint] = []
    if terminal[instance.start]:
        raise InvalidInput("start state is terminal")
    # Exploring starts: rarely-reached states otherwise keep stale early
    # estimates that can leave the greedy policy wrong there forever.
    starts = [s for s in range(n) if not terminal[s]]

    for ep in range(config.episodes):
        frac = min(1.0, ep / decay_eps)
        eps = config.eps_start + (config.eps_end - config.eps_start) * frac
        s = rng.choice(starts)
        ret_l = 0
        ret_f = 0
        prev = None  # (state, action, f index, follower reward)
        steps = 0
        outcome = Outcome.STEP_BUDGET_EXHAUSTED
        for _ in range(max_steps):
            row = ql[s]
            if rng.random() < eps:
                a = rng.randrange(n_acts[s])
            else:
                a = 0
                best = row[0]
                for i in range(1, n_acts[s]):
                    if row[i] > best:
                        best = row[i]
                        a = i
            fq = qf[(s, a)]
            if rng.random() < eps:
                f = rng.randrange(2)
            else:
                f = 0 if fq[0] >= fq[1] else 1
            obey = f == 0
            if obey:
                s2 = succ[s][a]
                r_l = r_obey_l[s][a]
                r_f = -1 if harmful_a[s][a] else 0
                term = term_a[s][a]
            else:
                s2 = s
                r_l = 0
                r_f = 1 if harmful_a[s][a] else -1
                term = False
            ret_l += r_l
            ret_f += r_f
            steps += 1
            # Leader update on (observation, action).
            target = r_l if term else r_l + gamma * max(ql[s2])
            row[a] += alpha * (target - row[a])
            vl[s][a] += 1
            # Follower update for the previous turn, now that the next
            # proposal is known.
            if prev is not None:
                ps, pa, pf, pr = prev
                pq = qf[(ps, pa)]
                pq[pf] += alpha * (pr + gamma * max(fq) - pq[pf])
                vf[(ps, pa)][pf] += 1
            prev = (s, a, f, r_f)
            s = s2
            if term:
                outcome = Outcome.GOAL if goal_a[prev[0]][a] else Outcome.HARM
                break
        if prev is not None:
            ps, pa, pf, pr = prev
            pq = qf[(ps, pa)]
            pq[pf] += alpha * (pr - pq[pf])
            vf[(ps, pa)][pf] += 1
        curves.append(EpisodeCurvePoint(ep, ret_l, ret_f, outcome, steps))

    leader_q = LeaderQTable()
    for s in range(n):
        if terminal[s]:
            continue
        key = observe(instance, s).key()
        leader_q.rows[key] = {a: ql[s][a] for a in range(n_acts[s])}
        leader_q.visit_rows[key] = {a: vl[s][a] for a in range(n_acts[s])}
    follower_q = FollowerQTable()
    follower_q.rows = qf
    follower_q.visit_rows = vf
    return leader_q, follower_q, curves


# --- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    episodes: int
    success_rate: float
    harm_rate: float
    budget_rate: float
    avg_leader_return: float
    avg_follower_return: float
    avg_steps: float
    veto_precision: float
    veto_recall: float

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "success_rate": self.success_rate,
            "harm_rate": self.harm_rate,
            "budget_rate": self.budget_rate,
            "avg_leader_return": self.avg_leader_return,
            "avg_follower_return": self.avg_follower_return,
            "avg_steps": self.avg_steps,
            "veto_precision": self.veto_precision,
            "veto_recall": self.veto_recall,
        }


def evaluate(
    instance: IdgInstance,
    leader_policy,
    follower_policy,
    episodes: int,
    max_steps: Optional[int] = None,
    seed: int = 0,
) -> Metrics:
    """Greedy (exploration-free) rollout statistics. Per-episode RNG streams
    derive from (seed, episode index), so episode order cannot matter."""
    if episodes < 1:
        raise InvalidInput("episodes must be >= 1")
    if max_steps is None:
        max_steps = 10 * instance.n_states
    counts = {Outcome.GOAL: 0, Outcome.HARM: 0, Outcome.STEP_BUDGET_EXHAUSTED: 0}
    tot_l = tot_f = tot_steps = 0
    disobeys = 0
    harmful_disobeys = 0
    harmful_proposals = 0
    harmful_vetoed = 0
    for i in range(episodes):
        log = run_episode(
            instance,
            leader_policy,
            follower_policy,
            max_steps=max_steps,
            seed=seed * 1_000_003 + i,
        )
        counts[log.outcome] += 1
        for rec in log.records:
            tot_l += rec.leader_reward
            tot_f += rec.follower_reward
            harmful = (
                classify_action(instance, rec.state, rec.action)
                is ActionClass.HARMFUL
            )
            if harmful:
                harmful_proposals += 1
            if rec.decision is FollowerAction.DISOBEY:
                disobeys += 1
                if harmful:
                    harmful_disobeys += 1
                    harmful_vetoed += 1
        tot_steps += len(log.records)
    return Metrics(
        episodes=episodes,
        success_rate=counts[Outcome.GOAL] / episodes,
        harm_rate=counts[Outcome.HARM] / episodes,
        budget_rate=counts[Outcome.STEP_BUDGET_EXHAUSTED] / episodes,
        avg_leader_return=tot_l / episodes,
        avg_follower_return=tot_f / episodes,
        avg_steps=tot_steps / episodes,
        veto_precision=harmful_disobeys / disobeys if disobeys else 1.0,
        veto_recall=harmful_vetoed / harmful_proposals if harmful_proposals else 1.0,
    )


# --- serialization -----------------------------------------------------------

_Q_HEADER = "idgq v1"


def serialize_leader_table(table: LeaderQTable) -> str:
    lines = [f"{_Q_HEADER} leader"]
    for key in sorted(table.rows):
        for a in sorted(table.rows[key]):
            lines.append(
                f"{key} {a} {table.rows[key][a]!r} {table.visit_rows[key][a]}"
            )
    return "\n".join(lines) + "\n"


def serialize_follower_table(table: FollowerQTable) -> str:
    lines = [f"{_Q_HEADER} follower"]
    for (s, a) in sorted(table.rows):
        q = table.rows[(s, a)]
        v = table.visit_rows[(s, a)]
        lines.append(f"{s} {a} obey {q[0]!r} {v[0]}")
        lines.append(f"{s} {a} disobey {q[1]!r} {v[1]}")
    return "\n".join(lines) + "\n"


def parse_leader_table(text: str) -> LeaderQTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != f"{_Q_HEADER} leader":
        raise InvalidInput("not a leader Q-table document")
    table = LeaderQTable()
    for ln in lines[1:]:
        key, a, val, vis = ln.split()
        table.rows.setdefault(key, {})[int(a)] = float(val)
        table.visit_rows.setdefault(key, {})[int(a)] = int(vis)
    return table


def parse_follower_table(text: str) -> FollowerQTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != f"{_Q_HEADER} follower":
        raise InvalidInput("not a follower Q-table document")
    table = FollowerQTable()
    for ln in lines[1:]:
        s, a, kind, val, vis = ln.split()
        k = (int(s), int(a))
        row = table.rows.setdefault(k, [0.0, 0.0])
        vrow = table.visit_rows.setdefault(k, [0, 0])
        idx = 0 if kind == "obey" else 1
        row[idx] = float(val)
        vrow[idx] = int(vis)
    return table


def curves_to_csv(curves: list[EpisodeCurvePoint]) -> str:
    lines = ["episode,leader_return,follower_return,outcome,steps"]
    for p in curves:
        lines.append(
            f"{p.episode},{p.leader_return},{p.follower_return},{p.outcome.value},{p.steps}"
        )
    return "\n".join(lines) + "\n"
