"""Exact progress signal and the solver-grounded depth oracle.

``distance`` is the optimal solution length d(s) from a state, infinite when
no goal-reaching sequence exists (Sokoban deadlocks).  ``delta`` is the
per-step improvement d(s) - d(s'), clamped to 0 across unrecoverable
states so the dense reward stays bounded.

The oracle policy plans with the exact solver: it decomposes the remaining
distance into the fewest commitments available from the depth set (dynamic
programming, ties toward larger depths first) and commits the next chunk of
the optimal action sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from . import sliding, sokoban
from .core import (
    Action,
    Budget,
    Commitment,
    DepthSet,
    DEFAULT_DEPTHS,
    EpisodeTranscript,
    Unsolvable,
    run_episode,
)


class OracleUnsolvable(Exception):
    """Oracle asked to act in a state with no goal-reaching sequence."""


INFINITE = math.inf

_solution_cache: dict = {}
_UNSOLVABLE = object()


def optimal_solution(state) -> tuple[Action, ...]:
    """Memoized optimal action sequence from ``state``.

    Raises Unsolvable when none exists.  The cache is per process; workers
    each build their own, and correctness never depends on a hit.
    """
    cached = _solution_cache.get(state)
    if cached is _UNSOLVABLE:
        raise Unsolvable("cached unsolvable state")
    if cached is not None:
        return cached
    try:
        if isinstance(state, sliding.SlidingState):
            solution = sliding.solve(state)
        elif isinstance(state, sokoban.SokobanState):
            solution = sokoban.solve(state)
        else:
            raise TypeError(f"no solver for {type(state).__name__}")
    except Unsolvable:
        _solution_cache[state] = _UNSOLVABLE
        raise
    # Stored as a tuple so no caller can mutate the cached entry.
    _solution_cache[state] = tuple(solution)
    return _solution_cache[state]


def clear_cache() -> None:
    _solution_cache.clear()


def distance(state) -> float:
    """Optimal solution length d(s); INFINITE when unsolvable."""
    try:
        return len(optimal_solution(state))
    except Unsolvable:
        return INFINITE


def delta(s, s_next) -> int:
    """Per-step improvement d(s) - d(s_next), clamped to 0 when either
    side is unrecoverable."""
    d_before = distance(s)
    d_after = distance(s_next)
    if d_before == INFINITE or d_after == INFINITE:
        return 0
    return int(d_before - d_after)


@dataclass(frozen=True)
class ProgressRecord:
    d_before: float
    d_after: float

    @property
    def delta(self) -> int:
        if self.d_before == INFINITE or self.d_after == INFINITE:
            return 0
        return int(self.d_before - self.d_after)


def progress_records(transcript: EpisodeTranscript) -> list[ProgressRecord]:
    """Recompute per-primitive-step progress records for a transcript."""
    records = []
    for decision in transcript.decisions:
        prev = decision.state_before
        for step in decision.steps:
            records.append(ProgressRecord(d_before=distance(prev),
                                          d_after=distance(step.state_after)))
            prev = step.state_after
    return records


def oracle_depth_sequence(remaining: int,
                          depths: DepthSet = DEFAULT_DEPTHS) -> list[int]:
    """Decompose ``remaining`` into the fewest depths from the set.

    Change-making by dynamic programming; among minimal decompositions the
    tie goes to the one with larger depths first, which spends the scarce
    early decisions on the longest commitments (20 -> [8, 8, 4],
    17 -> [8, 8, 1]).
    """
    if remaining < 1:
        raise ValueError(f"remaining must be >= 1, got {remaining}")
    menu = sorted(depths)
    dp = [0] + [math.inf] * remaining
    for r in range(1, remaining + 1):
        for h in menu:
            if h <= r and dp[r - h] + 1 < dp[r]:
                dp[r] = dp[r - h] + 1
    if math.isinf(dp[remaining]):
        raise ValueError(
            f"{remaining} cannot be decomposed with depths {menu}")
    sequence = []
    r = remaining
    while r:
        for h in reversed(menu):
            if h <= r and dp[r - h] == dp[r] - 1:
                sequence.append(h)
                r -= h
                break
    return sequence


def greedy_depth_sequence(remaining: int,
                          depths: DepthSet = DEFAULT_DEPTHS) -> list[int]:
    """Largest-fit-first decomposition, the independent cross-check for the
    DP route (the default depth set is a canonical system, so the counts
    agree)."""
    if remaining < 1:
        raise ValueError(f"remaining must be >= 1, got {remaining}")
    menu = sorted(depths, reverse=True)
    sequence = []
    r = remaining
    while r:
        for h in menu:
            if h <= r:
                sequence.append(h)
                r -= h
                break
        else:
            raise ValueError(
                f"{remaining} cannot be decomposed greedily with {menu}")
    return sequence


def oracle_policy(state, budget: Optional[Budget] = None,
                  depths: DepthSet = DEFAULT_DEPTHS) -> Commitment:
    """One oracle decision: the first chunk of the minimal-decision
    schedule, carrying the next h optimal actions.

    Raises OracleUnsolvable when d(state) is infinite.
    """
    try:
        solution = optimal_solution(state)
    except Unsolvable as exc:
        raise OracleUnsolvable(str(exc)) from exc
    if not solution:
        raise ValueError("state is already terminal; no decision to make")
    h = oracle_depth_sequence(len(solution), depths)[0]
    return Commitment(h=h, actions=tuple(solution[:h]))


class OracleDepthPolicy:
    """PolicyContract adapter around oracle_policy."""

    def __init__(self, depths: DepthSet = DEFAULT_DEPTHS):
        self.depths = depths

    def begin_episode(self, *, task: str, instance_id: str, budget: int,
                      depth_set: DepthSet, seed: int) -> None:
        self.depths = depth_set

    def decide(self, state, *, k: int, remaining_budget: int) -> Commitment:
        return oracle_policy(state, depths=self.depths)

    def end_episode(self) -> None:
        pass


def oracle_distribution(instances: Sequence, budget,
                        depths: DepthSet = DEFAULT_DEPTHS,
                        with_progress: bool = False) -> dict:
    """Run oracle episodes over a pool and report the empirical depth
    histogram, solve rate, and mean actions.

    ``budget`` is either a Budget applied to every instance or a mapping
    from task name to Budget.
    """
    counts = {h: 0 for h in depths}
    solved = 0
    total_actions = 0
    transcripts = []
    for instance in instances:
        k_budget = budget[instance.task] if isinstance(budget, dict) else budget
        policy = OracleDepthPolicy(depths)
        transcript = run_episode(
            policy, instance.state, Budget(K=k_budget.K),
            instance_id=instance.instance_id, depth_set=depths,
            distance_fn=distance if with_progress else None)
        transcripts.append(transcript)
        solved += transcript.solved
        total_actions += transcript.total_actions
        for decision in transcript.decisions:
            counts[decision.commitment.h] += 1
    decisions = sum(counts.values())
    return {
        "h": list(depths),
        "freq": [counts[h] / decisions if decisions else 0.0 for h in depths],
        "decisions": decisions,
        "solve_rate": solved / len(instances) if instances else 0.0,
        "mean_actions": total_actions / len(instances) if instances else 0.0,
        "transcripts": transcripts,
    }
