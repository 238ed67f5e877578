import pytest

from idg.game_core import IdgInstance, StateClass
from idg.gridworld import GridInstance, parse_instance, to_idg

T3_DOC = """\
grid 3 3
start 0 0
goal 2 2
lava 1 1
lava 2 1
"""


@pytest.fixture
def t3_grid() -> GridInstance:
    return parse_instance(T3_DOC)


@pytest.fixture
def t3(t3_grid) -> IdgInstance:
    return to_idg(t3_grid)


@pytest.fixture
def trap4() -> IdgInstance:
    # s0 and s1 shuttle between each other; the only way out is into the
    # harmful state h. The goal g has no incoming safe edge.
    return IdgInstance.build(
        classes=[StateClass.OTHER, StateClass.OTHER, StateClass.HARMFUL, StateClass.GOAL],
        successors=[[1, 2], [0, 2], [], []],
        start=0,
        state_labels=["s0", "s1", "h", "g"],
        action_labels=[["a1", "a2"], ["b1", "b2"], [], []],
    )


def t3_tile(grid: GridInstance, x: int, y: int) -> int:
    return y * grid.width + x


@pytest.fixture
def tile():
    return t3_tile
