"""Rectangular grid instantiation of the game.

Coordinates are (x = column from the left, y = row from the top). Tiles
are states; moves go to the four adjacent tiles, and off-grid moves are
simply absent from the action list (clamping them to self-loops would
create spurious single-tile safety traps).

The text document format is line oriented:

    grid <width> <height>
    start <x> <y>
    goal <x> <y>      # repeatable
    lava <x> <y>      # repeatable

``#`` starts a comment; lines after the header may appear in any order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import GenerationFailure, InvalidInput
from .game_core import IdgInstance, StateClass

# Fixed action order; action ids within a tile follow this order with
# off-grid directions skipped.
DIRECTIONS: tuple[tuple[str, int, int], ...] = (
    ("up", 0, -1),
    ("down", 0, 1),
    ("left", -1, 0),
    ("right", 1, 0),
)

DIRECTION_NAMES = tuple(name for name, _, _ in DIRECTIONS)


@dataclass(frozen=True)
class GridInstance:
    width: int
    height: int
    start: tuple[int, int]
    goals: frozenset[tuple[int, int]]
    lava: frozenset[tuple[int, int]]

    @staticmethod
    def build(width, height, start, goals, lava) -> "GridInstance":
        goals = frozenset(tuple(g) for g in goals)
        lava = frozenset(tuple(t) for t in lava)
        start = tuple(start)
        if width < 1 or height < 1:
            raise InvalidInput("grid dimensions must be positive")

        def check(coord, what):
            x, y = coord
            if not (0 <= x < width and 0 <= y < height):
                raise InvalidInput(f"{what} tile {coord} out of bounds")

        check(start, "start")
        for g in goals:
            check(g, "goal")
        for t in lava:
            check(t, "lava")
        if not goals:
            raise InvalidInput("at least one goal tile required")
        if goals & lava:
            raise InvalidInput(f"overlapping goal/lava at {sorted(goals & lava)}")
        if start in goals or start in lava:
            raise InvalidInput("start must not be a goal or lava tile")
        return GridInstance(width, height, start, goals, lava)

    def tile_index(self, x: int, y: int) -> int:
        return y * self.width + x

    def tile_coord(self, s: int) -> tuple[int, int]:
        return (s % self.width, s // self.width)


def to_idg(grid: GridInstance, _leader_view: bool = False) -> IdgInstance:
    """Expand a grid into a validated game instance.

    The returned instance carries a ``believed`` companion: the same grid
    with the lava erased, which is what the leader sees.
    """
    n = grid.width * grid.height
    classes = []
    successors = []
    action_labels = []
    state_labels = []
    for s in range(n):
        x, y = grid.tile_coord(s)
        state_labels.append(f"({x},{y})")
        if (x, y) in grid.goals:
            cls = StateClass.GOAL
        elif (x, y) in grid.lava:
            cls = StateClass.HARMFUL
        else:
            cls = StateClass.OTHER
        classes.append(cls)
        succ: list[int] = []
        names: list[str] = []
        if cls is StateClass.OTHER:
            for name, dx, dy in DIRECTIONS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < grid.width and 0 <= ny < grid.height:
                    succ.append(grid.tile_index(nx, ny))
                    names.append(name)
        successors.append(succ)
        action_labels.append(names)
    believed = None
    if not _leader_view:
        open_grid = GridInstance(
            grid.width, grid.height, grid.start, grid.goals, frozenset()
        )
        believed = to_idg(open_grid, _leader_view=True)
    return IdgInstance.build(
        classes=classes,
        successors=successors,
        start=grid.tile_index(*grid.start),
        state_labels=state_labels,
        action_labels=action_labels,
        believed=believed,
    )


def parse_instance(text: str) -> GridInstance:
    width = height = None
    start = None
    goals: list[tuple[int, int]] = []
    lava: list[tuple[int, int]] = []
    saw_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_any = True
        parts = line.split()
        kind = parts[0]
        if kind == "grid":
            if width is not None:
                raise InvalidInput(f"line {lineno}: duplicate grid header")
            width, height = _parse_pair(parts[1:], lineno)
        elif kind in ("start", "goal", "lava"):
            if width is None:
                raise InvalidInput(f"line {lineno}: grid header must come first")
            coord = _parse_pair(parts[1:], lineno)
            if kind == "start":
                if start is not None:
                    raise InvalidInput(f"line {lineno}: duplicate start")
                start = coord
            elif kind == "goal":
                goals.append(coord)
            else:
                lava.append(coord)
        else:
            raise InvalidInput(f"line {lineno}: unknown directive {kind!r}")
    if not saw_any:
        raise InvalidInput("empty document")
    if width is None:
        raise InvalidInput("missing grid header")
    if start is None:
        raise InvalidInput("missing start tile")
    return GridInstance.build(width, height, start, goals, lava)


def _parse_pair(parts: list[str], lineno: int) -> tuple[int, int]:
    if len(parts) != 2:
        raise InvalidInput(f"line {lineno}: expected two integers, got {parts!r}")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError:
        raise InvalidInput(f"line {lineno}: expected two integers, got {parts!r}")


def serialize_instance(grid: GridInstance) -> str:
    """Canonical form: header, start, then goals and lavas sorted by (y, x)."""
    lines = [f"grid {grid.width} {grid.height}", f"start {grid.start[0]} {grid.start[1]}"]
    for x, y in sorted(grid.goals, key=lambda c: (c[1], c[0])):
        lines.append(f"goal {x} {y}")
    for x, y in sorted(grid.lava, key=lambda c: (c[1], c[0])):
        lines.append(f"lava {x} {y}")
    return "\n".join(lines) + "\n"


def generate_random(
    width: int,
    height: int,
    lava_density: float,
    require_safe_path: bool,
    seed: int,
    max_attempts: int = 1000,
) -> GridInstance:
    """Seeded random grid: start and one goal uniform on distinct tiles, each
    remaining tile lava independently with probability ``lava_density``.

    With ``require_safe_path`` the sampler rejects grids where the goal
    cannot be reached without crossing lava.
    """
    if width * height < 2:
        raise InvalidInput("need at least two tiles")
    if not (0.0 <= lava_density <= 1.0):
        raise InvalidInput("lava_density must be in [0,1]")
    rng = random.Random(seed)
    tiles = [(x, y) for y in range(height) for x in range(width)]
    for _ in range(max_attempts):
        start, goal = rng.sample(tiles, 2)
        lava = [
            t
            for t in tiles
            if t not in (start, goal) and rng.random() < lava_density
        ]
        grid = GridInstance.build(width, height, start, {goal}, lava)
        if not require_safe_path or _safe_path_exists(grid):
            return grid
    raise GenerationFailure(
        f"no safely solvable {width}x{height} grid at density {lava_density} "
        f"within {max_attempts} attempts (seed {seed})"
    )


def _safe_path_exists(grid: GridInstance) -> bool:
    from collections import deque

    if grid.start in grid.goals:
        return True
    seen = {grid.start}
    queue = deque([grid.start])
    while queue:
        x, y = queue.popleft()
        for _, dx, dy in DIRECTIONS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < grid.width and 0 <= ny < grid.height):
                continue
            t = (nx, ny)
            if t in grid.lava or t in seen:
                continue
            if t in grid.goals:
                return True
            seen.add(t)
            queue.append(t)
    return False
