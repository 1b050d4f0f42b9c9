"""Sokoban on a bounded grid: pushes only, all player moves counted.

The player walks in four directions.  Walking into a box pushes it one cell
if the cell beyond is free; blocked pushes and walks into walls are no-ops.
The episode goal is every box on a goal cell.

Solving is IDA* over (player, boxes) states with an admissible heuristic
(box-to-nearest-goal Manhattan sum plus the player's walk to its nearest
box).  Search prunes statically dead box placements: non-goal corners and
wall-hugging runs with no goal, both computable from walls and goals alone.
When an iteration finds no frontier beyond the threshold the reachable
space is exhausted and the state is proved unsolvable.

The generator works backwards: boxes start on goals and are pulled around
by a random walk (pulls are reverse pushes, so the scrambled state is
solvable by construction), then random interior walls are added one at a
time, each kept only if the exact solver still finds a solution.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .core import (
    ACTIONS,
    Action,
    GenerationExhausted,
    Unsolvable,
    register_environment,
)

Cell = tuple[int, int]

# (dx, dy) per action; y grows downward so UP is -y.
DELTAS = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}


@dataclass(frozen=True)
class SokobanState:
    width: int
    height: int
    walls: frozenset[Cell]
    boxes: frozenset[Cell]
    goals: frozenset[Cell]
    player: Cell

    def __post_init__(self) -> None:
        if self.width < 3 or self.height < 3:
            raise ValueError("board must be at least 3x3")
        if len(self.boxes) != len(self.goals):
            raise ValueError(
                f"{len(self.boxes)} boxes vs {len(self.goals)} goals")
        if not self.boxes:
            raise ValueError("need at least one box")
        occupied = self.boxes | {self.player}
        if occupied & self.walls:
            raise ValueError("box or player on a wall")
        for x, y in occupied | self.walls | self.goals:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"cell {(x, y)} outside {self.width}x{self.height}")
        if self.player in self.boxes:
            raise ValueError("player on a box")
        for x in range(self.width):
            for y in (0, self.height - 1):
                if (x, y) not in self.walls:
                    raise ValueError(f"boundary cell {(x, y)} is not a wall")
        for y in range(self.height):
            for x in (0, self.width - 1):
                if (x, y) not in self.walls:
                    raise ValueError(f"boundary cell {(x, y)} is not a wall")


@dataclass(frozen=True)
class SokobanInstance:
    state: SokobanState
    seed: int
    optimal_length: Optional[int] = None

    @property
    def task(self) -> str:
        return "sokoban"

    @property
    def start(self) -> SokobanState:
        return self.state

    @property
    def boxes_count(self) -> int:
        return len(self.state.boxes)

    @property
    def instance_id(self) -> str:
        s = self.state
        return (f"sokoban-{s.width}x{s.height}-b{len(s.boxes)}-s{self.seed}")


def is_goal(state: SokobanState) -> bool:
    return state.boxes == state.goals


def step(state: SokobanState, action: Action) -> tuple[SokobanState, bool]:
    """Apply one action.  Returns (next state, whether anything moved)."""
    dx, dy = DELTAS[action]
    px, py = state.player
    target = (px + dx, py + dy)
    if target in state.walls:
        return state, False
    if target in state.boxes:
        beyond = (target[0] + dx, target[1] + dy)
        if beyond in state.walls or beyond in state.boxes:
            return state, False
        boxes = (state.boxes - {target}) | {beyond}
        nxt = SokobanState(width=state.width, height=state.height,
                           walls=state.walls, boxes=boxes,
                           goals=state.goals, player=target)
        return nxt, True
    nxt = SokobanState(width=state.width, height=state.height,
                       walls=state.walls, boxes=state.boxes,
                       goals=state.goals, player=target)
    return nxt, True


@lru_cache(maxsize=None)
def dead_cells(width: int, height: int, walls: frozenset,
               goals: frozenset) -> frozenset:
    """Cells where a box can never reach any goal, from statics alone.

    Two rules: a non-goal cell with two orthogonally adjacent walls
    (corner), and every cell of a wall-bounded run that hugs a continuous
    wall on one side and contains no goal (the box can only slide along the
    run and never leave the wall).  Cells outside the grid count as walls.
    """
    def blocked(x: int, y: int) -> bool:
        return (x, y) in walls or not (0 <= x < width and 0 <= y < height)

    dead: set[Cell] = set()
    for y in range(height):
        for x in range(width):
            if blocked(x, y) or (x, y) in goals:
                continue
            up, down = blocked(x, y - 1), blocked(x, y + 1)
            left, right = blocked(x - 1, y), blocked(x + 1, y)
            if (up and left) or (up and right) or (down and left) or (down and right):
                dead.add((x, y))

    def runs(line_cells: list[Cell]) -> list[list[Cell]]:
        out, current = [], []
        for cell in line_cells:
            if blocked(*cell):
                if current:
                    out.append(current)
                current = []
            else:
                current.append(cell)
        if current:
            out.append(current)
        return out

    for y in range(height):
        for run in runs([(x, y) for x in range(width)]):
            if any(c in goals for c in run):
                continue
            if all(blocked(x, y - 1) for x, _ in run) or \
               all(blocked(x, y + 1) for x, _ in run):
                dead.update(run)
    for x in range(width):
        for run in runs([(x, y) for y in range(height)]):
            if any(c in goals for c in run):
                continue
            if all(blocked(x - 1, y) for _, y in run) or \
               all(blocked(x + 1, y) for _, y in run):
                dead.update(run)
    return frozenset(dead)


def is_deadlocked(state: SokobanState) -> bool:
    """True when some box sits on a statically dead cell."""
    dead = dead_cells(state.width, state.height, state.walls, state.goals)
    return bool(state.boxes & dead)


def _heuristic(player: Cell, boxes: frozenset, goals: tuple[Cell, ...]) -> int:
    total = 0
    nearest_box = None
    solved = True
    for bx, by in boxes:
        d = min(abs(bx - gx) + abs(by - gy) for gx, gy in goals)
        total += d
        if d:
            solved = False
        walk = abs(player[0] - bx) + abs(player[1] - by)
        if nearest_box is None or walk < nearest_box:
            nearest_box = walk
    if solved:
        return 0
    return total + max(0, nearest_box - 1)


def solve(state: SokobanState) -> list[Action]:
    """Move-optimal action sequence (every player move counts) via IDA*.

    Raises Unsolvable when the search space is exhausted without reaching
    the goal, or immediately when the start is statically deadlocked.
    """
    if is_goal(state):
        return []
    if is_deadlocked(state):
        raise Unsolvable("box on a statically dead cell")
    walls = state.walls
    goals = tuple(sorted(state.goals))
    goal_set = state.goals
    dead = dead_cells(state.width, state.height, walls, goal_set)
    deltas = [(a, DELTAS[a]) for a in ACTIONS]

    def search(player: Cell, boxes: frozenset, g: int, bound: int,
               tt: dict) -> tuple[float, Optional[list[Action]]]:
        f = g + _heuristic(player, boxes, goals)
        if f > bound:
            return f, None
        if boxes == goal_set:
            return g, []
        key = (player, boxes)
        seen = tt.get(key)
        if seen is not None and seen <= g:
            return float("inf"), None
        tt[key] = g
        minimum = float("inf")
        for action, (dx, dy) in deltas:
            target = (player[0] + dx, player[1] + dy)
            if target in walls:
                continue
            if target in boxes:
                beyond = (target[0] + dx, target[1] + dy)
                if beyond in walls or beyond in boxes:
                    continue
                if beyond in dead:
                    continue
                next_boxes = (boxes - {target}) | {beyond}
            else:
                next_boxes = boxes
            t, tail = search(target, next_boxes, g + 1, bound, tt)
            if tail is not None:
                return t, [action] + tail
            minimum = min(minimum, t)
        return minimum, None

    bound = _heuristic(state.player, state.boxes, goals)
    while True:
        threshold, tail = search(state.player, state.boxes, 0, bound, {})
        if tail is not None:
            return tail
        if threshold == float("inf"):
            raise Unsolvable("search space exhausted without reaching goal")
        bound = int(threshold)


def solve_length(state: SokobanState) -> int:
    return len(solve(state))


RETRY_CAP = 1_000
WALL_FRACTION = 0.20
PULL_BIAS = 0.8


def generate(width: int, height: int, n_boxes: int, seed: int,
             pulls: tuple[int, int] = (4, 24)) -> SokobanInstance:
    """Generate a solver-verified instance by reverse play.

    Starts from an empty bordered room with boxes on their goals, pulls
    them around with a biased random walk (solvable by construction since
    every pull reverses into a push), then tries adding interior walls at
    20% of the empty cells, keeping each only if the exact solver still
    succeeds.  Raises GenerationExhausted after RETRY_CAP failed attempts.
    """
    if n_boxes < 1:
        raise ValueError("need at least one box")
    if width < 3 or height < 3:
        raise ValueError("board must be at least 3x3")
    rng = random.Random(seed)
    border = frozenset(
        (x, y) for x in range(width) for y in range(height)
        if x in (0, width - 1) or y in (0, height - 1))
    interior = [(x, y) for x in range(1, width - 1)
                for y in range(1, height - 1)]
    if len(interior) < n_boxes + 1:
        # Too dense to even place goals and a player; no retry can help.
        raise GenerationExhausted(
            f"{n_boxes} boxes cannot fit a {width}x{height} board")

    for _ in range(RETRY_CAP):
        cells = rng.sample(interior, n_boxes + 1)
        goals = frozenset(cells[:n_boxes])
        boxes = set(goals)
        player = cells[n_boxes]
        n_pulls = rng.randint(*pulls)
        ok = True
        for _ in range(n_pulls):
            moves = []
            for action in ACTIONS:
                dx, dy = DELTAS[action]
                target = (player[0] + dx, player[1] + dy)
                if target in border or target in boxes:
                    continue
                behind = (player[0] - dx, player[1] - dy)
                moves.append((target, behind))
            if not moves:
                ok = False
                break
            pulling = [(t, b) for t, b in moves if b in boxes]
            if pulling and rng.random() < PULL_BIAS:
                target, behind = pulling[rng.randrange(len(pulling))]
                boxes.discard(behind)
                boxes.add(player)
            else:
                target, behind = moves[rng.randrange(len(moves))]
            player = target
        if not ok or boxes == goals:
            continue

        state = SokobanState(width=width, height=height, walls=border,
                             boxes=frozenset(boxes), goals=goals,
                             player=player)
        free = [c for c in interior
                if c not in boxes and c not in goals and c != player]
        rng.shuffle(free)
        walls = set(border)
        for cell in free[: max(1, int(WALL_FRACTION * len(free)))]:
            candidate = SokobanState(
                width=width, height=height,
                walls=frozenset(walls | {cell}),
                boxes=state.boxes, goals=state.goals, player=state.player)
            try:
                solve(candidate)
            except Unsolvable:
                continue
            walls.add(cell)
            state = candidate
        depth = solve_length(state)
        if depth < 1:
            continue
        return SokobanInstance(state=state, seed=seed, optimal_length=depth)
    raise GenerationExhausted(
        f"no sokoban instance on {width}x{height} with {n_boxes} boxes "
        f"after {RETRY_CAP} attempts (seed {seed})")


def to_ascii(state: SokobanState) -> str:
    rows = []
    for y in range(state.height):
        row = []
        for x in range(state.width):
            cell = (x, y)
            if cell in state.walls:
                ch = "#"
            elif cell in state.boxes:
                ch = "*" if cell in state.goals else "$"
            elif cell == state.player:
                ch = "+" if cell in state.goals else "@"
            elif cell in state.goals:
                ch = "."
            else:
                ch = " "
            row.append(ch)
        rows.append("".join(row))
    return "\n".join(rows)


def from_ascii(text: str) -> SokobanState:
    lines = [line for line in text.splitlines() if line.strip("\r")]
    height = len(lines)
    width = max(len(line) for line in lines)
    walls, boxes, goals = set(), set(), set()
    player = None
    for y, line in enumerate(lines):
        for x, ch in enumerate(line):
            cell = (x, y)
            if ch == "#":
                walls.add(cell)
            elif ch == "$":
                boxes.add(cell)
            elif ch == ".":
                goals.add(cell)
            elif ch == "*":
                boxes.add(cell)
                goals.add(cell)
            elif ch == "@":
                player = cell
            elif ch == "+":
                player = cell
                goals.add(cell)
            elif ch != " ":
                raise ValueError(f"unknown map character {ch!r} at {cell}")
    if player is None:
        raise ValueError("map has no player")
    return SokobanState(width=width, height=height, walls=frozenset(walls),
                        boxes=frozenset(boxes), goals=frozenset(goals),
                        player=player)


def to_json(instance: SokobanInstance) -> str:
    s = instance.state
    return json.dumps({
        "task": "sokoban",
        "width": s.width,
        "height": s.height,
        "walls": sorted(list(c) for c in s.walls),
        "boxes": sorted(list(c) for c in s.boxes),
        "goals": sorted(list(c) for c in s.goals),
        "player": list(s.player),
        "seed": instance.seed,
    })


def from_json(text: str) -> SokobanInstance:
    obj = json.loads(text)
    if obj.get("task") != "sokoban":
        raise ValueError(f"not a sokoban instance: task={obj.get('task')!r}")
    state = SokobanState(
        width=obj["width"], height=obj["height"],
        walls=frozenset(tuple(c) for c in obj["walls"]),
        boxes=frozenset(tuple(c) for c in obj["boxes"]),
        goals=frozenset(tuple(c) for c in obj["goals"]),
        player=tuple(obj["player"]))
    return SokobanInstance(state=state, seed=obj["seed"])


class SokobanEnvironment:
    task = "sokoban"

    def transition(self, state: SokobanState, action: Action) -> SokobanState:
        return step(state, action)[0]

    def is_goal(self, state: SokobanState) -> bool:
        return is_goal(state)


register_environment(SokobanState, SokobanEnvironment())
