"""Sliding tile puzzle (n x n, blank = 0, goal = 1..n*n-1 then blank).

Actions move the blank: UP swaps the blank with the tile above it, which is
the same as that tile sliding down into the hole.  Moves that would push the
blank off the board are no-ops.

The solver is A* with Manhattan distance plus a linear-conflict bonus of 2
per conflicting pair, which keeps it exact.  The generator walks the blank
backwards from the goal without immediately undoing moves, then keeps the
instance only if A* confirms the optimal distance equals the requested
depth.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .core import (
    Action,
    GenerationExhausted,
    Unsolvable,
    register_environment,
)


@dataclass(frozen=True)
class SlidingState:
    n: int
    tiles: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"board size must be >= 2, got {self.n}")
        if sorted(self.tiles) != list(range(self.n * self.n)):
            raise ValueError(
                f"tiles must be a permutation of 0..{self.n * self.n - 1}")

    @property
    def blank(self) -> int:
        return self.tiles.index(0)


@dataclass(frozen=True)
class SlidingInstance:
    state: SlidingState
    depth: int
    seed: int

    @property
    def task(self) -> str:
        return "sliding"

    @property
    def start(self) -> SlidingState:
        return self.state

    @property
    def instance_id(self) -> str:
        return f"sliding-{self.state.n}x{self.state.n}-d{self.depth}-s{self.seed}"


def goal_state(n: int) -> SlidingState:
    return SlidingState(n=n, tiles=tuple(range(1, n * n)) + (0,))


def is_goal(state: SlidingState) -> bool:
    return state.tiles == goal_state(state.n).tiles


# Offsets the blank moves by, per action, as (row, col).
_BLANK_MOVES = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}


@lru_cache(maxsize=None)
def _neighbor_table(n: int) -> tuple[tuple[tuple[Action, int], ...], ...]:
    """For each blank index, the legal actions and resulting blank index."""
    table = []
    for idx in range(n * n):
        r, c = divmod(idx, n)
        entries = []
        for action, (dr, dc) in _BLANK_MOVES.items():
            nr, nc = r + dr, c + dc
            if 0 <= nr < n and 0 <= nc < n:
                entries.append((action, nr * n + nc))
        table.append(tuple(entries))
    return tuple(table)


def step(state: SlidingState, action: Action) -> tuple[SlidingState, bool]:
    """Apply one action.  Returns (next state, whether anything moved)."""
    n = state.n
    blank = state.blank
    for cand, target in _neighbor_table(n)[blank]:
        if cand is action:
            tiles = list(state.tiles)
            tiles[blank], tiles[target] = tiles[target], tiles[blank]
            return SlidingState(n=n, tiles=tuple(tiles)), True
    return state, False


def is_solvable(state: SlidingState) -> bool:
    """Parity test: permutation inversions, plus blank row for even n."""
    n = state.n
    seq = [t for t in state.tiles if t != 0]
    inversions = sum(
        1
        for i in range(len(seq))
        for j in range(i + 1, len(seq))
        if seq[i] > seq[j]
    )
    if n % 2 == 1:
        return inversions % 2 == 0
    blank_row_from_bottom = n - state.blank // n
    return (inversions + blank_row_from_bottom) % 2 == 1


@lru_cache(maxsize=None)
def _manhattan_table(n: int) -> tuple[tuple[int, ...], ...]:
    """table[pos][tile] = Manhattan distance of tile at pos to its goal."""
    table = []
    for pos in range(n * n):
        pr, pc = divmod(pos, n)
        row = [0] * (n * n)
        for tile in range(1, n * n):
            gr, gc = divmod(tile - 1, n)
            row[tile] = abs(pr - gr) + abs(pc - gc)
        table.append(tuple(row))
    return tuple(table)


def _heuristic(tiles: tuple[int, ...], n: int) -> int:
    md = _manhattan_table(n)
    h = 0
    for pos, tile in enumerate(tiles):
        if tile:
            h += md[pos][tile]
    # Linear conflicts: two tiles in their goal row (or column) but in
    # reversed order need two extra moves each pair.
    for r in range(n):
        in_row = [tiles[r * n + c] for c in range(n)
                  if tiles[r * n + c] and (tiles[r * n + c] - 1) // n == r]
        for i in range(len(in_row)):
            for j in range(i + 1, len(in_row)):
                if in_row[i] > in_row[j]:
                    h += 2
    for c in range(n):
        in_col = [tiles[r * n + c] for r in range(n)
                  if tiles[r * n + c] and (tiles[r * n + c] - 1) % n == c]
        for i in range(len(in_col)):
            for j in range(i + 1, len(in_col)):
                if in_col[i] > in_col[j]:
                    h += 2
    return h


def solve(state: SlidingState) -> list[Action]:
    """Optimal action sequence to the goal via A*.  Raises Unsolvable for
    wrong-parity states."""
    if not is_solvable(state):
        raise Unsolvable(f"unsolvable parity: {state.tiles}")
    n = state.n
    goal = goal_state(n).tiles
    start = state.tiles
    if start == goal:
        return []
    neighbors = _neighbor_table(n)
    open_heap: list[tuple[int, int, int, tuple[int, ...], int]] = []
    counter = 0
    heapq.heappush(open_heap, (_heuristic(start, n), 0, counter, start,
                               start.index(0)))
    best_g: dict[tuple[int, ...], int] = {start: 0}
    parent: dict[tuple[int, ...], tuple[tuple[int, ...], Action]] = {}
    while open_heap:
        f, g, _, tiles, blank = heapq.heappop(open_heap)
        if g > best_g.get(tiles, g):
            continue
        if tiles == goal:
            return _reconstruct(parent, tiles)
        for action, target in neighbors[blank]:
            lst = list(tiles)
            lst[blank], lst[target] = lst[target], lst[blank]
            nxt = tuple(lst)
            ng = g + 1
            if ng < best_g.get(nxt, float("inf")):
                best_g[nxt] = ng
                parent[nxt] = (tiles, action)
                counter += 1
                heapq.heappush(open_heap, (ng + _heuristic(nxt, n), ng,
                                           counter, nxt, target))
    raise Unsolvable(f"search exhausted without goal: {state.tiles}")


def _reconstruct(parent, tiles) -> list[Action]:
    actions = []
    while tiles in parent:
        tiles, action = parent[tiles]
        actions.append(action)
    actions.reverse()
    return actions


def solve_length(state: SlidingState) -> int:
    return len(solve(state))


_INVERSE = {
    Action.UP: Action.DOWN,
    Action.DOWN: Action.UP,
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
}

RETRY_CAP = 10_000


def generate(n: int, depth: int, seed: int) -> SlidingInstance:
    """Generate an instance whose optimal solution has exactly ``depth``
    moves.

    Scrambles the goal with a non-backtracking random walk of ``depth``
    steps, then keeps the result only if A* verifies the optimal distance.
    Raises GenerationExhausted after RETRY_CAP rejected walks.
    """
    if n < 2:
        raise ValueError(f"board size must be >= 2 to scramble, got {n}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = random.Random(seed)
    neighbors = _neighbor_table(n)
    goal = goal_state(n)
    for _ in range(RETRY_CAP):
        tiles = list(goal.tiles)
        blank = len(tiles) - 1
        last: Optional[Action] = None
        for _ in range(depth):
            options = [
                (action, target)
                for action, target in neighbors[blank]
                if last is None or action is not _INVERSE[last]
            ]
            action, target = options[rng.randrange(len(options))]
            tiles[blank], tiles[target] = tiles[target], tiles[blank]
            blank = target
            last = action
        state = SlidingState(n=n, tiles=tuple(tiles))
        if solve_length(state) == depth:
            return SlidingInstance(state=state, depth=depth, seed=seed)
    raise GenerationExhausted(
        f"no sliding instance of depth {depth} on {n}x{n} after "
        f"{RETRY_CAP} walks (seed {seed})")


def to_json(instance: SlidingInstance) -> str:
    return json.dumps({
        "task": "sliding",
        "n": instance.state.n,
        "tiles": list(instance.state.tiles),
        "depth": instance.depth,
        "seed": instance.seed,
    })


def from_json(text: str) -> SlidingInstance:
    obj = json.loads(text)
    if obj.get("task") != "sliding":
        raise ValueError(f"not a sliding instance: task={obj.get('task')!r}")
    state = SlidingState(n=obj["n"], tiles=tuple(obj["tiles"]))
    return SlidingInstance(state=state, depth=obj["depth"], seed=obj["seed"])


class SlidingEnvironment:
    task = "sliding"

    def transition(self, state: SlidingState, action: Action) -> SlidingState:
        return step(state, action)[0]

    def is_goal(self, state: SlidingState) -> bool:
        return is_goal(state)


register_environment(SlidingState, SlidingEnvironment())
