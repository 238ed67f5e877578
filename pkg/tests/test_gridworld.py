import pytest

from idg.errors import GenerationFailure, InvalidInput
from idg.game_core import StateClass, classify_action, is_terminal, ActionClass
from idg.gridworld import (
    GridInstance,
    generate_random,
    parse_instance,
    serialize_instance,
    to_idg,
)
from idg.solver import goal_reachable

from conftest import T3_DOC


class TestToIdg:
    def test_t3_counts(self, t3_grid, t3):
        assert t3.n_states == 9
        # action counts by coordinate arithmetic: corners 2, edges 3, center 4,
        # but only for non-terminal tiles
        for s in range(9):
            x, y = s % 3, s // 3
            if (x, y) in t3_grid.goals | t3_grid.lava:
                assert len(t3.successors[s]) == 0
                continue
            expected = sum(
                1
                for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0))
                if 0 <= x + dx < 3 and 0 <= y + dy < 3
            )
            assert len(t3.successors[s]) == expected

    def test_forced_single_move(self):
        grid = GridInstance.build(2, 1, (0, 0), {(1, 0)}, set())
        inst = to_idg(grid)
        assert inst.n_states == 2
        assert list(inst.actions(0)) == [0]
        assert inst.action_labels[0] == ("right",)
        assert classify_action(inst, 0, 0) is ActionClass.GOAL_REACHING

    def test_lava_blocks_corridor(self):
        grid = GridInstance.build(3, 1, (0, 0), {(2, 0)}, {(1, 0)})
        inst = to_idg(grid)
        reachable, _ = goal_reachable(inst, inst.start)
        assert not reachable

    def test_class_coherence(self, t3_grid, t3):
        for s in range(t3.n_states):
            x, y = s % 3, s // 3
            assert ((x, y) in t3_grid.lava) == (
                t3.classes[s] is StateClass.HARMFUL
            )
        for s in range(t3.n_states):
            if is_terminal(t3, s):
                continue
            for a in t3.actions(s):
                t = t3.successors[s][a]
                tx, ty = t % 3, t // 3
                assert ((tx, ty) in t3_grid.lava) == (
                    classify_action(t3, s, a) is ActionClass.HARMFUL
                )

    def test_believed_twin_has_no_lava(self, t3):
        assert t3.believed is not None
        assert all(c is not StateClass.HARMFUL for c in t3.believed.classes)
        # believed (1,1) is an ordinary traversable tile with 4 moves
        assert len(t3.believed.successors[1 * 3 + 1]) == 4


class TestParser:
    def test_t3_roundtrip(self, t3_grid):
        assert t3_grid.width == 3 and t3_grid.height == 3
        assert t3_grid.start == (0, 0)
        assert t3_grid.goals == {(2, 2)}
        assert t3_grid.lava == {(1, 1), (2, 1)}
        assert parse_instance(serialize_instance(t3_grid)) == t3_grid

    def test_comments_and_order(self):
        doc = "# a comment\ngrid 2 2\nlava 1 0\ngoal 1 1 # inline\nstart 0 0\n"
        grid = parse_instance(doc)
        assert grid.lava == {(1, 0)}

    def test_overlap_rejected(self):
        doc = "grid 2 2\nstart 0 0\ngoal 1 1\nlava 1 1\n"
        with pytest.raises(InvalidInput, match="overlap"):
            parse_instance(doc)

    def test_empty_document(self):
        with pytest.raises(InvalidInput):
            parse_instance("")

    def test_error_carries_line(self):
        with pytest.raises(InvalidInput, match="line 2"):
            parse_instance("grid 2 2\nwibble 1 1\n")

    def test_out_of_bounds(self):
        with pytest.raises(InvalidInput, match="out of bounds"):
            parse_instance("grid 2 2\nstart 0 0\ngoal 5 5\n")

    @pytest.mark.parametrize("seed", range(20))
    def test_roundtrip_random(self, seed):
        grid = generate_random(4, 3, 0.3, False, seed)
        assert parse_instance(serialize_instance(grid)) == grid


class TestGeneration:
    def test_open_grid_always_reachable(self):
        for seed in range(10):
            grid = generate_random(3, 3, 0.0, False, seed)
            inst = to_idg(grid)
            assert goal_reachable(inst, inst.start)[0]

    def test_full_density_fails_unless_adjacent(self):
        failures = 0
        adjacent = 0
        for seed in range(30):
            try:
                grid = generate_random(3, 3, 1.0, True, seed, max_attempts=50)
            except GenerationFailure:
                failures += 1
                continue
            sx, sy = grid.start
            gx, gy = next(iter(grid.goals))
            assert abs(sx - gx) + abs(sy - gy) == 1
            adjacent += 1
        assert failures + adjacent == 30

    def test_determinism(self):
        a = generate_random(5, 5, 0.2, True, 42)
        b = generate_random(5, 5, 0.2, True, 42)
        assert a == b
        assert serialize_instance(a) == serialize_instance(b)

    def test_safe_path_respected(self):
        for seed in range(20):
            grid = generate_random(5, 5, 0.25, True, seed)
            inst = to_idg(grid)
            assert goal_reachable(inst, inst.start)[0]


class TestGridValidation:
    def test_start_on_lava_rejected(self):
        with pytest.raises(InvalidInput):
            GridInstance.build(2, 2, (0, 0), {(1, 1)}, {(0, 0)})

    def test_no_goal_rejected(self):
        with pytest.raises(InvalidInput):
            GridInstance.build(2, 2, (0, 0), set(), set())

    def test_too_small_for_generation(self):
        with pytest.raises(InvalidInput):
            generate_random(1, 1, 0.0, False, 0)
