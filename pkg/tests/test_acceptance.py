"""Acceptance gate: one test per top-level behavioural guarantee.

Each test prints a single PASS line on success so the suite doubles as a
checklist. Oracles live in oracles.py and never share code with the
implementation they check.
"""

import json
import random
from fractions import Fraction

import pytest
from click.testing import CliRunner

from idg.cli import cli
from idg.game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    step_payoff,
)
from idg.gridworld import generate_random, serialize_instance, to_idg
from idg.learn import TrainConfig, evaluate, train
from idg.mdp import follower_reward, leader_reward, run_episode
from idg.solver import (
    always_obey_policy,
    detect_safety_traps,
    follower_optimal_policy,
    fully_informed_leader,
    leader_replanning_policy,
    safe_goal_distances,
    solve_1idg,
)

from conftest import T3_DOC
from oracles import brute_force_max_trap, grid_safe_distance, random_instance


def done(name):
    print(f"PASS {name}")


def test_payoff_table_is_exact():
    expected = {
        (ActionClass.GOAL_REACHING, FollowerAction.OBEY): (1, 0),
        (ActionClass.GOAL_REACHING, FollowerAction.DISOBEY): (0, -1),
        (ActionClass.HARMFUL, FollowerAction.OBEY): (-1, -1),
        (ActionClass.HARMFUL, FollowerAction.DISOBEY): (0, 1),
        (ActionClass.OTHER, FollowerAction.OBEY): (0, 0),
        (ActionClass.OTHER, FollowerAction.DISOBEY): (0, -1),
    }
    for (cls, dec), (rl, rf) in expected.items():
        pay = step_payoff(cls, dec)
        assert (pay.leader, pay.follower) == (rl, rf)
        assert isinstance(pay.leader, int) and isinstance(pay.follower, int)
    done("payoff table reproduces all six leaf pairs exactly")


def test_single_step_equilibria_on_random_states():
    rng = random.Random(202)
    for _ in range(200):
        inst = random_instance(rng)
        rep = solve_1idg(inst, 0)
        has_goal = any(
            inst.classes[t] is StateClass.GOAL for t in inst.successors[0]
        )
        assert rep.expected_leader == (Fraction(1) if has_goal else Fraction(0))
        assert rep.deviations.certified, rep.deviations.entries
        assert all(e.delta <= 0 for e in rep.deviations.entries)
    done("200 random single-step states: leader payoff 1 iff a goal action exists, profile certified")


def test_trap_detection_matches_brute_force():
    rng = random.Random(31)
    for _ in range(500):
        inst = random_instance(rng, max_other=10)
        assert set(detect_safety_traps(inst).members) == brute_force_max_trap(inst)
    done("500 random instances: trap detection equals subset-enumeration oracle")


def test_goal_directed_leaders_on_generated_grids():
    rng = random.Random(77)
    for i in range(200):
        w = rng.randint(3, 6)
        h = rng.randint(3, 6)
        grid = generate_random(w, h, rng.uniform(0.0, 0.3), True, seed=9000 + i)
        inst = to_idg(grid)
        budget = 10 * inst.n_states
        follower = follower_optimal_policy(inst)

        log = run_episode(
            inst, fully_informed_leader(inst), follower, budget, seed=i
        )
        assert log.outcome.value == "goal"
        assert len(log.records) == grid_safe_distance(grid)
        assert all(r.leader_reward >= 0 for r in log.records)

        log = run_episode(
            inst, leader_replanning_policy(inst), follower, budget, seed=i
        )
        assert log.outcome.value == "goal"
        assert len(log.records) <= budget
        assert all(r.leader_reward >= 0 for r in log.records)
    done("200 generated grids: informed leader optimal, replanning leader safe within 10|S| turns")


def test_mdp_rewards_equal_game_payoffs():
    # one concrete transition per (action class, decision) cell
    inst = IdgInstance.build(
        classes=[StateClass.OTHER, StateClass.GOAL, StateClass.HARMFUL, StateClass.OTHER],
        successors=[[1, 2, 3], [], [], [0]],
        start=0,
    )
    cls_of = {0: ActionClass.GOAL_REACHING, 1: ActionClass.HARMFUL, 2: ActionClass.OTHER}
    for a, cls in cls_of.items():
        for dec in FollowerAction:
            s_next = inst.successors[0][a] if dec is FollowerAction.OBEY else 0
            pay = step_payoff(cls, dec)
            assert leader_reward(inst, 0, a, s_next) == pay.leader
            assert follower_reward(inst, 0, a, dec, s_next) == pay.follower
    done("environment rewards and game payoffs are the same table on concrete transitions")


def _learning_instances():
    from idg.gridworld import parse_instance

    insts = [to_idg(parse_instance(T3_DOC))]
    for seed in range(10):
        insts.append(to_idg(generate_random(5, 5, 0.2, True, seed)))
    return insts


def test_learned_pair_validates_equilibrium():
    for k, inst in enumerate(_learning_instances()):
        lq, fq, _ = train(inst, TrainConfig(episodes=50_000, seed=k))
        opt = follower_optimal_policy(inst)
        for (s, a), visits in fq.visit_rows.items():
            if sum(visits) >= 100:
                assert fq.greedy(s, a) is opt.decide(s, a), (k, s, a)
        m = evaluate(inst, lq.as_policy(), fq.as_policy(), episodes=1000, seed=k)
        assert m.harm_rate == 0.0, k
        assert m.success_rate >= 0.95, (k, m.success_rate)
    done("learned leader/follower pair: greedy follower matches optimal, harm 0.0, success >= 0.95")


def test_blind_obedience_contrast():
    checked = 0
    for k, inst in enumerate(_learning_instances()[1:]):
        safe = safe_goal_distances(inst)[inst.start]
        believed = safe_goal_distances(inst.believed)[inst.start]
        obey = evaluate(
            inst,
            leader_replanning_policy(inst),
            always_obey_policy(inst),
            episodes=200,
            seed=k,
        )
        veto = evaluate(
            inst,
            leader_replanning_policy(inst),
            follower_optimal_policy(inst),
            episodes=200,
            seed=k,
        )
        assert veto.harm_rate == 0.0, k
        if believed < safe:  # every believed-shortest path crosses lava
            assert obey.harm_rate > 0.0, k
            checked += 1
    assert checked > 0  # the contrast must actually trigger somewhere
    done("blind obedience harms wherever the believed-shortest path crosses lava; veto never does")


def test_seeded_pipelines_are_byte_identical():
    runner = CliRunner()

    def pipeline(tmp):
        out = []
        gen = runner.invoke(
            cli,
            ["--seed", "7", "-o", f"{tmp}/g.idg", "gen", "--width", "5", "--height", "5"],
        )
        assert gen.exit_code == 0, gen.output
        out.append(open(f"{tmp}/g.idg").read())
        for args in (
            ["--format", "json", "solve", f"{tmp}/g.idg", "--horizon", "4"],
            ["--format", "json", "traps", f"{tmp}/g.idg"],
        ):
            r = runner.invoke(cli, args)
            assert r.exit_code == 0, r.output
            out.append(r.output)
        r = runner.invoke(
            cli,
            ["--seed", "3", "train", f"{tmp}/g.idg", "--episodes", "2000", "--out", f"{tmp}/run"],
        )
        assert r.exit_code == 0, r.output
        out.append(open(f"{tmp}/run/leader.qt").read())
        out.append(open(f"{tmp}/run/follower.qt").read())
        r = runner.invoke(
            cli,
            [
                "--format", "json", "--seed", "5",
                "eval", f"{tmp}/g.idg",
                "--leader", "learned", "--leader-table", f"{tmp}/run/leader.qt",
                "--follower", "learned", "--follower-table", f"{tmp}/run/follower.qt",
                "--episodes", "200",
            ],
        )
        assert r.exit_code == 0, r.output
        out.append(r.output)
        json.loads(out[-1])  # stays valid json
        return out

    with runner.isolated_filesystem() as tmp_a:
        first = pipeline(".")
    with runner.isolated_filesystem() as tmp_b:
        second = pipeline(".")
    assert first == second
    done("seeded gen/train/eval, solve and traps pipelines are byte-identical across runs")
