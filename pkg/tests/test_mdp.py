import pytest

from idg.errors import InvalidInput
from idg.game_core import (
    ActionClass,
    FollowerAction,
    IdgInstance,
    StateClass,
    apply_protocol,
    step_payoff,
)
from idg.gridworld import GridInstance, parse_instance, to_idg
from idg.mdp import (
    Outcome,
    follower_reward,
    leader_reward,
    observe,
    parse_log,
    replay_consistent,
    run_episode,
    serialize_log,
)
from idg.solver import (
    always_obey_policy,
    follower_optimal_policy,
    fully_informed_leader,
    leader_replanning_policy,
)


def three_class_instance():
    return IdgInstance.build(
        classes=[
            StateClass.OTHER,
            StateClass.GOAL,
            StateClass.HARMFUL,
            StateClass.OTHER,
        ],
        successors=[[1, 2, 3], [], [], [0]],
        start=0,
    )


def T(x, y):
    """Tile (x, y) to state index on the 3x3 grid."""
    return y * 3 + x


class TestRewards:
    def test_leader_reward_cases(self, t3):
        goal, lava = T(2, 2), T(2, 1)
        s = T(1, 2)
        a = t3.action_labels[s].index("right")
        assert leader_reward(t3, s, a, goal) == 1
        s20 = T(2, 0)
        a_down = t3.action_labels[s20].index("down")
        assert leader_reward(t3, s20, a_down, lava) == -1
        assert leader_reward(t3, s20, a_down, s20) == 0  # vetoed, state held

    def test_follower_reward_cases(self, t3):
        s20 = T(2, 0)
        a_down = t3.action_labels[s20].index("down")  # into lava
        a_left = t3.action_labels[s20].index("left")
        lava = T(2, 1)
        assert follower_reward(t3, s20, a_down, FollowerAction.DISOBEY, s20) == 1
        assert follower_reward(t3, s20, a_left, FollowerAction.DISOBEY, s20) == -1
        assert follower_reward(t3, s20, a_left, FollowerAction.OBEY, T(1, 0)) == 0
        assert follower_reward(t3, s20, a_down, FollowerAction.OBEY, lava) == -1

    def test_reward_payoff_coherence(self):
        # The one-step payoff table and the decision-process rewards are the
        # same table; check every (class, decision) cell on a concrete
        # transition.
        inst = three_class_instance()
        by_class = {
            ActionClass.GOAL_REACHING: 0,
            ActionClass.HARMFUL: 1,
            ActionClass.OTHER: 2,
        }
        for cls, a in by_class.items():
            for f in FollowerAction:
                s_next = apply_protocol(inst, 0, a, f)
                r_l = leader_reward(inst, 0, a, s_next)
                r_f = follower_reward(inst, 0, a, f, s_next)
                assert (r_l, r_f) == tuple(step_payoff(cls, f))


class TestObserve:
    def test_lava_invisible(self, t3_grid):
        with_lava = to_idg(t3_grid)
        without = to_idg(
            GridInstance.build(3, 3, (0, 0), {(2, 2)}, {(2, 1)})
        )
        # differ only in the lava at (1,1); observed at (0,0) they must be
        # byte-for-byte identical
        assert (
            observe(with_lava, 0).key() == observe(without, 0).key()
        )

    def test_goal_flag_visible(self, t3):
        s = T(1, 2)
        obs = observe(t3, s)
        a_right = t3.action_labels[s].index("right")
        flags = dict(obs.actions)
        assert flags[a_right] is True
        assert sum(flags.values()) == 1

    def test_no_harmful_token(self, t3):
        for s in range(t3.n_states):
            key = observe(t3, s).key()
            assert "harm" not in key.lower()
            assert "lava" not in key.lower()


class TestRunEpisode:
    def test_t3_informed_win(self, t3):
        log = run_episode(
            t3,
            fully_informed_leader(t3),
            follower_optimal_policy(t3),
            max_steps=50,
            seed=7,
        )
        assert log.outcome is Outcome.GOAL
        assert len(log.records) == 4  # BFS distance from the start
        assert sum(r.leader_reward for r in log.records) == 1
        assert all(r.leader_reward != -1 for r in log.records)

    def test_trap4_budget_exhausted(self, trap4):
        log = run_episode(
            trap4,
            fully_informed_leader(trap4),
            follower_optimal_policy(trap4),
            max_steps=50,
            seed=3,
        )
        assert log.outcome is Outcome.STEP_BUDGET_EXHAUSTED
        assert sum(r.leader_reward for r in log.records) == 0

    def test_single_step_goal(self):
        inst = to_idg(GridInstance.build(2, 1, (0, 0), {(1, 0)}, set()))
        log = run_episode(
            inst,
            fully_informed_leader(inst),
            follower_optimal_policy(inst),
            max_steps=1,
            seed=0,
        )
        assert log.outcome is Outcome.GOAL
        assert len(log.records) == 1

    def test_replay_determinism(self, t3):
        logs = [
            run_episode(
                t3,
                leader_replanning_policy(t3),
                follower_optimal_policy(t3),
                max_steps=90,
                seed=11,
            )
            for _ in range(2)
        ]
        assert logs[0] == logs[1]
        assert serialize_log(logs[0]) == serialize_log(logs[1])

    def test_replay_consistency(self, t3):
        log = run_episode(
            t3,
            leader_replanning_policy(t3),
            always_obey_policy(t3),
            max_steps=90,
            seed=5,
        )
        assert replay_consistent(t3, log)

    def test_veto_safety(self, t3, trap4):
        for inst in (t3, trap4):
            for seed in range(10):
                log = run_episode(
                    inst,
                    fully_informed_leader(inst),
                    follower_optimal_policy(inst),
                    max_steps=40,
                    seed=seed,
                )
                assert all(r.leader_reward != -1 for r in log.records)

    def test_bad_budget_rejected(self, t3):
        with pytest.raises(InvalidInput):
            run_episode(
                t3,
                fully_informed_leader(t3),
                follower_optimal_policy(t3),
                max_steps=0,
                seed=0,
            )


class TestLogSerialization:
    def test_round_trip_bit_exact(self, t3):
        log = run_episode(
            t3,
            leader_replanning_policy(t3),
            follower_optimal_policy(t3),
            max_steps=90,
            seed=2,
        )
        text = serialize_log(log)
        parsed = parse_log(text)
        assert parsed == log
        assert serialize_log(parsed) == text

    def test_malformed_rejected(self):
        with pytest.raises(InvalidInput):
            parse_log("not a log\n")
