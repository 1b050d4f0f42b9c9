"""Shared contract for committed-execution puzzle MDPs.

A policy does not act one move at a time.  At each decision point it commits
to a depth ``h`` and a concrete sequence of ``h`` primitive actions, and the
environment executes the whole sequence open loop.  Episodes are metered by
two clocks: primitive time ``t`` (one tick per executed action) and decision
time ``k`` (one tick per commitment), with a hard budget on ``k``.

This module owns the task-agnostic pieces: the action alphabet, depth sets,
commitment and budget types, transcript records, the commitment executor,
and the episode loop.  Concrete environments register themselves here and
are looked up by state type.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol, Sequence


MAX_DEPTH = 8


class CommitmentError(Exception):
    """Base class for commitment validation failures."""


class InvalidDepth(CommitmentError):
    """Commitment depth outside the active depth set."""


class LengthMismatch(CommitmentError):
    """Commitment action sequence length differs from its depth."""


class PolicyProtocolError(Exception):
    """An external policy violated the decision protocol."""


class Unsolvable(Exception):
    """No action sequence reaches the goal from this state."""


class GenerationExhausted(Exception):
    """Instance generator hit its retry cap without an accepted instance."""


class DomainError(ValueError):
    """Numeric argument outside the domain of a model formula."""


class Action(enum.Enum):
    """Primitive grid actions shared by both tasks."""

    UP = "U"
    DOWN = "D"
    LEFT = "L"
    RIGHT = "R"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_char(cls, ch: str) -> "Action":
        try:
            return cls(ch)
        except ValueError:
            raise ValueError(f"unknown action character {ch!r}") from None


ACTIONS = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)


def parse_actions(chars: Sequence[str]) -> tuple[Action, ...]:
    """Parse an iterable of single-character action labels."""
    return tuple(Action.from_char(c) for c in chars)


def format_actions(actions: Sequence[Action]) -> list[str]:
    return [a.value for a in actions]


@dataclass(frozen=True)
class DepthSet:
    """Menu of allowed commitment depths, strictly increasing, capped at 8."""

    depths: tuple[int, ...] = (1, 2, 4, 8)

    def __post_init__(self) -> None:
        if not self.depths:
            raise ValueError("depth set must be non-empty")
        if any(not isinstance(h, int) or h < 1 for h in self.depths):
            raise ValueError(f"depths must be positive integers: {self.depths}")
        if any(b <= a for a, b in zip(self.depths, self.depths[1:])):
            raise ValueError(f"depths must be strictly increasing: {self.depths}")
        if self.depths[-1] > MAX_DEPTH:
            raise ValueError(f"max depth is {MAX_DEPTH}, got {self.depths[-1]}")

    def __contains__(self, h: object) -> bool:
        return h in self.depths

    def __iter__(self):
        return iter(self.depths)

    def __len__(self) -> int:
        return len(self.depths)

    @property
    def max(self) -> int:
        return self.depths[-1]

    def with_depth(self, h: int) -> "DepthSet":
        """Return a copy extended with ``h`` (used for descriptive sweeps)."""
        return DepthSet(tuple(sorted(set(self.depths) | {h})))


DEFAULT_DEPTHS = DepthSet()


@dataclass(frozen=True)
class Commitment:
    """A depth and exactly that many primitive actions, executed open loop."""

    h: int
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        if self.h < 1:
            raise InvalidDepth(f"depth must be >= 1, got {self.h}")
        if len(self.actions) != self.h:
            raise LengthMismatch(
                f"commitment of depth {self.h} carries {len(self.actions)} actions"
            )


@dataclass
class Budget:
    """Decision budget: at most K commitments per episode."""

    K: int
    K_used: int = 0

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"budget must be >= 1, got {self.K}")

    @property
    def remaining(self) -> int:
        return self.K - self.K_used

    @property
    def exhausted(self) -> bool:
        return self.K_used >= self.K


@dataclass
class Clocks:
    """Primitive clock t, decision clock k, and the t value at each k."""

    t: int = 0
    k: int = 0
    t_at_decision: list[int] = field(default_factory=lambda: [0])

    def advance(self, executed: int) -> None:
        self.t += executed
        self.k += 1
        self.t_at_decision.append(self.t)


@dataclass(frozen=True)
class StepRecord:
    """One executed primitive action inside a commitment."""

    action: Action
    moved: bool
    state_after: Any


@dataclass(frozen=True)
class DecisionRecord:
    """One commitment: the state it was made in, the steps executed, and
    solver distances before/after when a distance function was supplied."""

    state_before: Any
    commitment: Commitment
    steps: tuple[StepRecord, ...]
    d_before: Optional[float] = None
    d_after: Optional[float] = None
    deltas: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class EpisodeTranscript:
    """Full record of one episode, sufficient to replay or audit it."""

    instance_id: str
    task: str
    decisions: tuple[DecisionRecord, ...]
    solved: bool
    clocks: Clocks
    budget: Budget
    error: Optional[str] = None

    @property
    def total_actions(self) -> int:
        return self.clocks.t

    @property
    def total_decisions(self) -> int:
        return self.clocks.k


class EnvironmentContract(Protocol):
    """What the executor and episode loop need from a task environment."""

    task: str

    def transition(self, state: Any, action: Action) -> Any:
        """Apply one primitive action.  Blocked actions return the state
        unchanged (a no-op that still costs a clock tick)."""
        ...

    def is_goal(self, state: Any) -> bool:
        ...


class PolicyContract(Protocol):
    """Decision-time interface the episode loop drives."""

    def begin_episode(self, *, task: str, instance_id: str, budget: int,
                      depth_set: DepthSet, seed: int) -> None:
        ...

    def decide(self, state: Any, *, k: int, remaining_budget: int) -> Commitment:
        ...

    def end_episode(self) -> None:
        ...


_ENVIRONMENTS: dict[type, EnvironmentContract] = {}
_ENVIRONMENTS_BY_TASK: dict[str, EnvironmentContract] = {}


def register_environment(state_type: type, env: EnvironmentContract) -> None:
    _ENVIRONMENTS[state_type] = env
    _ENVIRONMENTS_BY_TASK[env.task] = env


def environment_for(state: Any) -> EnvironmentContract:
    env = _ENVIRONMENTS.get(type(state))
    if env is None:
        raise TypeError(f"no environment registered for {type(state).__name__}")
    return env


def environment_for_task(task: str) -> EnvironmentContract:
    env = _ENVIRONMENTS_BY_TASK.get(task)
    if env is None:
        raise ValueError(f"unknown task {task!r}")
    return env


def execute_commitment(
    state: Any,
    commitment: Commitment,
    env: Optional[EnvironmentContract] = None,
    depth_set: DepthSet = DEFAULT_DEPTHS,
    stop_at_goal: bool = False,
) -> tuple[Any, tuple[StepRecord, ...]]:
    """Execute a commitment open loop and return (final state, step records).

    Raises InvalidDepth if the depth is not in ``depth_set`` and
    LengthMismatch if the action count disagrees with the depth.  With
    ``stop_at_goal`` the run halts at the first goal state; the remaining
    committed actions are neither executed nor recorded.
    """
    if env is None:
        env = environment_for(state)
    if commitment.h not in depth_set:
        raise InvalidDepth(
            f"depth {commitment.h} not in depth set {tuple(depth_set)}"
        )
    if len(commitment.actions) != commitment.h:
        raise LengthMismatch(
            f"commitment of depth {commitment.h} carries "
            f"{len(commitment.actions)} actions"
        )
    records: list[StepRecord] = []
    current = state
    for action in commitment.actions:
        nxt = env.transition(current, action)
        records.append(StepRecord(action=action, moved=nxt != current,
                                  state_after=nxt))
        current = nxt
        if stop_at_goal and env.is_goal(current):
            break
    return current, tuple(records)


def run_episode(
    policy: PolicyContract,
    initial_state: Any,
    budget: Budget,
    *,
    instance_id: str = "",
    depth_set: DepthSet = DEFAULT_DEPTHS,
    seed: int = 0,
    distance_fn: Optional[Callable[[Any], float]] = None,
    env: Optional[EnvironmentContract] = None,
) -> EpisodeTranscript:
    """Run one budget-metered episode and return its transcript.

    The loop asks the policy for a commitment, executes it open loop, and
    charges one unit of decision budget, until the goal is reached or the
    budget runs out.  Reaching the goal mid-commitment ends the episode at
    that primitive step.  A PolicyProtocolError from the policy, whether
    raised while setting the episode up or while deciding, still consumes
    one budget unit and ends the episode unsolved, with the error noted on
    the transcript; it never propagates out of the episode.

    When ``distance_fn`` is given (typically the memoized solver distance),
    each decision record carries distances before/after and the per-step
    distance deltas, which downstream reward and diagnostics readers use.
    """
    if env is None:
        env = environment_for(initial_state)
    budget = Budget(K=budget.K)
    clocks = Clocks()
    decisions: list[DecisionRecord] = []
    state = initial_state
    solved = env.is_goal(state)
    error: Optional[str] = None
    try:
        try:
            policy.begin_episode(task=env.task, instance_id=instance_id,
                                 budget=budget.K, depth_set=depth_set,
                                 seed=seed)
        except PolicyProtocolError as exc:
            budget.K_used += 1
            clocks.advance(0)
            error = str(exc)
        while error is None and not solved and not budget.exhausted:
            try:
                commitment = policy.decide(
                    state, k=clocks.k, remaining_budget=budget.remaining)
            except PolicyProtocolError as exc:
                budget.K_used += 1
                clocks.advance(0)
                error = str(exc)
                break
            nxt, steps = execute_commitment(
                state, commitment, env, depth_set, stop_at_goal=True)
            d_before = d_after = None
            deltas = None
            if distance_fn is not None:
                d_before = distance_fn(state)
                d_after = distance_fn(nxt)
                deltas = tuple(_step_deltas(state, steps, distance_fn))
            budget.K_used += 1
            clocks.advance(len(steps))
            decisions.append(DecisionRecord(
                state_before=state, commitment=commitment, steps=steps,
                d_before=d_before, d_after=d_after, deltas=deltas))
            state = nxt
            solved = env.is_goal(state)
    finally:
        policy.end_episode()
    return EpisodeTranscript(
        instance_id=instance_id, task=env.task, decisions=tuple(decisions),
        solved=solved, clocks=clocks, budget=budget, error=error)


def _step_deltas(state: Any, steps: Sequence[StepRecord],
                 distance_fn: Callable[[Any], float]) -> list[int]:
    """Per-step distance deltas, clamped to 0 across unrecoverable states."""
    deltas = []
    prev = state
    d_prev = distance_fn(prev)
    for rec in steps:
        d_next = distance_fn(rec.state_after)
        if d_prev == float("inf") or d_next == float("inf"):
            deltas.append(0)
        else:
            deltas.append(int(d_prev - d_next))
        d_prev = d_next
    return deltas
