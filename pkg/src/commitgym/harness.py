"""Budget-constrained batch evaluation of commitment-depth policies.

Built-in policies (fixed, random, oracle, greedy) all take their actions
from the exact solver and differ only in how they choose the depth, which
isolates the depth policy from action quality.  External policies attach
over a JSON-lines subprocess protocol (v1):

  harness -> policy  {"type": "hello", "v": "v1", "task": ..., "instance_id":
                      ..., "episode_seed": ..., "budget": K, "depths": [...]}
  policy  -> harness {"type": "hello", "v": "v1"}
  harness -> policy  {"type": "observe", "k": ..., "remaining_budget": ...,
                      "task": ..., "state": {...}, "render": optional base64}
  policy  -> harness {"type": "commit", "h": ..., "actions": ["U", ...]}

One subprocess serves one episode; closing stdin ends it.  Malformed
replies, depths outside the set, length mismatches, and timeouts raise
PolicyProtocolError: the episode fails, consumes the decision's budget
unit, and the batch continues.

Evaluation seeds every episode from (policy seed, instance id), so results
are identical for any worker count.
"""

from __future__ import annotations

import base64
import hashlib
import json
import queue
import random
import shlex
import subprocess
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from . import datagen, oracle
from .core import (
    Budget,
    Commitment,
    DEFAULT_DEPTHS,
    DepthSet,
    EpisodeTranscript,
    PolicyProtocolError,
    Unsolvable,
    parse_actions,
    run_episode,
)

PROTOCOL_VERSION = "v1"

BUDGET_PRESETS = {
    "loose": {"sliding": 15, "sokoban": 6},
    "tight": {"sliding": 10, "sokoban": 4},
}


class IncomparablePools(Exception):
    """Pareto comparison between summaries of different pools or budgets."""


def episode_seed(policy_seed: int, instance_id: str) -> int:
    """Stable per-episode seed; identical across platforms and workers."""
    digest = hashlib.sha256(f"{policy_seed}:{instance_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PolicySpec:
    """Declarative policy description, safe to ship to worker processes.

    kinds: "fixed" (constant depth h), "random" (uniform over the depth
    set), "oracle" (minimal-decision schedule), "greedy" (custom h_source
    callable), "external" (subprocess speaking the wire protocol).
    """

    kind: str
    h: Optional[int] = None
    command: tuple[str, ...] = ()
    seed: int = 0
    timeout: float = 60.0
    send_render: bool = False
    h_source: Optional[Callable] = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "random", "oracle", "greedy",
                             "external"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "fixed" and (self.h is None or self.h < 1):
            raise ValueError("fixed policy needs a positive depth")
        if self.kind == "external" and not self.command:
            raise ValueError("external policy needs a command")
        if self.kind == "greedy" and self.h_source is None:
            raise ValueError("greedy policy needs an h_source callable")

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.h}"
        if self.kind == "external":
            return f"external:{' '.join(self.command)}"
        return self.kind


def parse_policy_spec(text: str, seed: int = 0,
                      timeout: float = 60.0) -> PolicySpec:
    """Parse CLI-style policy strings: fixed:4, random, oracle,
    external:<command line>."""
    if text.startswith("fixed:"):
        return PolicySpec(kind="fixed", h=int(text.split(":", 1)[1]),
                          seed=seed)
    if text == "random":
        return PolicySpec(kind="random", seed=seed)
    if text == "oracle":
        return PolicySpec(kind="oracle", seed=seed)
    if text.startswith("external:"):
        command = tuple(shlex.split(text.split(":", 1)[1]))
        return PolicySpec(kind="external", command=command, seed=seed,
                          timeout=timeout)
    raise ValueError(f"cannot parse policy spec {text!r}")


class GreedySolverPolicy:
    """Solver-backed policy: the depth comes from h_source, the actions are
    the next h moves of the current optimal solution (padded by repeating
    the last move; padding never executes because episodes stop at goal).

    h_source(state, k, remaining_budget, rng) -> depth.
    """

    def __init__(self, h_source: Callable):
        self.h_source = h_source
        self.depths = DEFAULT_DEPTHS
        self.rng = random.Random(0)

    def begin_episode(self, *, task: str, instance_id: str, budget: int,
                      depth_set: DepthSet, seed: int) -> None:
        self.depths = depth_set
        self.rng = random.Random(seed)

    def decide(self, state, *, k: int, remaining_budget: int) -> Commitment:
        try:
            solution = oracle.optimal_solution(state)
        except Unsolvable as exc:
            raise PolicyProtocolError(
                f"solver-backed policy in unsolvable state: {exc}") from exc
        h = self.h_source(state, k, remaining_budget, self.rng)
        actions = list(solution[:h])
        while len(actions) < h:
            actions.append(actions[-1] if actions else solution[-1])
        return Commitment(h=h, actions=tuple(actions))

    def end_episode(self) -> None:
        pass


class FixedDepthPolicy(GreedySolverPolicy):
    def __init__(self, h: int):
        super().__init__(lambda state, k, remaining, rng: h)


class RandomDepthPolicy(GreedySolverPolicy):
    """Uniform depth draw per decision from the episode's depth set, using
    the per-episode seeded rng (reproducible by protocol clients)."""

    def __init__(self):
        super().__init__(self._draw)

    def _draw(self, state, k, remaining, rng):
        menu = tuple(self.depths)
        return menu[rng.randrange(len(menu))]


def build_policy(spec: PolicySpec):
    if spec.kind == "fixed":
        return FixedDepthPolicy(spec.h)
    if spec.kind == "random":
        return RandomDepthPolicy()
    if spec.kind == "oracle":
        return oracle.OracleDepthPolicy()
    if spec.kind == "greedy":
        return GreedySolverPolicy(spec.h_source)
    if spec.kind == "external":
        return ExternalPolicy(spec.command, timeout=spec.timeout,
                              send_render=spec.send_render)
    raise ValueError(f"unknown policy kind {spec.kind!r}")


class _LineReader:
    """Background reader so stdout reads can time out cleanly."""

    def __init__(self, stream):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,),
                                        daemon=True)
        self._thread.start()

    def _pump(self, stream) -> None:
        for line in stream:
            self._queue.put(line)
        self._queue.put(None)

    def readline(self, timeout: float) -> str:
        try:
            line = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise PolicyProtocolError(
                f"no reply within {timeout} s") from None
        if line is None:
            raise PolicyProtocolError("policy process closed its stream")
        return line


def build_observation(state, k: int, remaining_budget: int,
                      send_render: bool = False) -> dict:
    obj = {
        "type": "observe",
        "k": k,
        "remaining_budget": remaining_budget,
        "task": datagen.state_to_obj(state)["task"],
        "state": datagen.state_to_obj(state),
    }
    if send_render:
        obj["render"] = base64.b64encode(
            datagen.render_state(state)).decode("ascii")
    return obj


def parse_commit(line: str, depth_set: DepthSet) -> Commitment:
    """Validate a commit reply; any violation is a PolicyProtocolError."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise PolicyProtocolError(f"malformed JSON reply: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("type") != "commit":
        raise PolicyProtocolError(
            f"expected a commit message, got {obj!r}")
    h = obj.get("h")
    if not isinstance(h, int) or h not in depth_set:
        raise PolicyProtocolError(
            f"depth {h!r} not in depth set {tuple(depth_set)}")
    raw = obj.get("actions")
    if not isinstance(raw, list) or len(raw) != h:
        size = len(raw) if isinstance(raw, list) else "non-list"
        raise PolicyProtocolError(
            f"commit of depth {h} carries {size} actions")
    try:
        actions = parse_actions(raw)
    except ValueError as exc:
        raise PolicyProtocolError(str(exc)) from exc
    return Commitment(h=h, actions=actions)


class ExternalPolicy:
    """Drives one subprocess per episode over the v1 wire protocol."""

    def __init__(self, command: Sequence[str], timeout: float = 60.0,
                 send_render: bool = False):
        self.command = tuple(command)
        self.timeout = timeout
        self.send_render = send_render
        self.depths = DEFAULT_DEPTHS
        self._proc: Optional[subprocess.Popen] = None
        self._reader: Optional[_LineReader] = None

    def begin_episode(self, *, task: str, instance_id: str, budget: int,
                      depth_set: DepthSet, seed: int) -> None:
        self.depths = depth_set
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                text=True, bufsize=1)
        except OSError as exc:
            raise PolicyProtocolError(
                f"cannot start policy process: {exc}") from exc
        self._reader = _LineReader(self._proc.stdout)
        hello = {
            "type": "hello",
            "v": PROTOCOL_VERSION,
            "task": task,
            "instance_id": instance_id,
            "episode_seed": seed,
            "budget": budget,
            "depths": list(depth_set),
        }
        self._send(hello)
        reply = self._read_json()
        if reply.get("type") != "hello" or reply.get("v") != PROTOCOL_VERSION:
            raise PolicyProtocolError(
                f"bad handshake reply: {reply!r}")

    def decide(self, state, *, k: int, remaining_budget: int) -> Commitment:
        self._send(build_observation(state, k, remaining_budget,
                                     self.send_render))
        line = self._reader.readline(self.timeout)
        return parse_commit(line, self.depths)

    def end_episode(self) -> None:
        proc, self._proc, self._reader = self._proc, None, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def _send(self, obj: dict) -> None:
        if self._proc is None or self._proc.stdin is None:
            raise PolicyProtocolError("policy process not running")
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (OSError, BrokenPipeError) as exc:
            raise PolicyProtocolError(
                f"cannot write to policy process: {exc}") from exc

    def _read_json(self) -> dict:
        line = self._reader.readline(self.timeout)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PolicyProtocolError(f"malformed JSON reply: {exc}") from exc
        if not isinstance(obj, dict):
            raise PolicyProtocolError(f"expected an object, got {obj!r}")
        return obj


def run_external_policy(command: Sequence[str], observation: dict,
                        depth_set: DepthSet = DEFAULT_DEPTHS,
                        timeout: float = 60.0,
                        hello: Optional[dict] = None) -> Commitment:
    """One-shot protocol round trip: spawn, handshake, observe, commit.

    Useful for conformance tests; episode evaluation uses a persistent
    process per episode instead.
    """
    policy = ExternalPolicy(command, timeout=timeout)
    policy.begin_episode(
        task=(hello or {}).get("task", observation.get("task", "")),
        instance_id=(hello or {}).get("instance_id", ""),
        budget=(hello or {}).get("budget", 0),
        depth_set=depth_set,
        seed=(hello or {}).get("episode_seed", 0))
    try:
        line_obj = dict(observation)
        line_obj.setdefault("type", "observe")
        policy._send(line_obj)
        reply = policy._reader.readline(timeout)
        return parse_commit(reply, depth_set)
    finally:
        policy.end_episode()


def resolve_budget(budget: Union[Budget, str, dict], task: str) -> int:
    """Accepts a Budget, a preset name, or a task->K mapping."""
    if isinstance(budget, Budget):
        return budget.K
    if isinstance(budget, str):
        try:
            return BUDGET_PRESETS[budget][task]
        except KeyError:
            raise ValueError(
                f"unknown budget preset {budget!r} for task {task!r}") from None
    if isinstance(budget, dict):
        value = budget[task]
        return value.K if isinstance(value, Budget) else int(value)
    raise TypeError(f"cannot resolve budget from {budget!r}")


def _budget_label(budget: Union[Budget, str, dict],
                  tasks: Sequence[str]) -> dict:
    return {task: resolve_budget(budget, task) for task in sorted(set(tasks))}


def effective_depth_set(spec: PolicySpec,
                        depth_set: DepthSet = DEFAULT_DEPTHS) -> DepthSet:
    """Fixed-depth descriptive sweeps (h = 3, 5, 6, 7) extend the episode's
    depth set; everything else uses the declared set unchanged."""
    if spec.kind == "fixed" and spec.h not in depth_set:
        return depth_set.with_depth(spec.h)
    return depth_set


def _episode_worker(payload) -> EpisodeTranscript:
    spec, instance, k_budget, depths_tuple, with_progress = payload
    depth_set = DepthSet(depths_tuple)
    policy = build_policy(spec)
    return run_episode(
        policy, instance.state, Budget(K=k_budget),
        instance_id=instance.instance_id, depth_set=depth_set,
        seed=episode_seed(spec.seed, instance.instance_id),
        distance_fn=oracle.distance if with_progress else None)


def run_batch(spec: PolicySpec, instances: Sequence,
              budget: Union[Budget, str, dict],
              workers: int = 1,
              depth_set: DepthSet = DEFAULT_DEPTHS,
              with_progress: bool = True) -> list[EpisodeTranscript]:
    """One episode per instance, in instance order, any worker count."""
    if not instances:
        raise ValueError("instance pool is empty")
    depths = effective_depth_set(spec, depth_set)
    payloads = [
        (spec, instance, resolve_budget(budget, instance.task),
         tuple(depths), with_progress)
        for instance in instances
    ]
    if workers <= 1:
        return [_episode_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_worker, payloads))


@dataclass(frozen=True)
class DiagnosticsSummary:
    """Per-episode means of the efficiency measures: steps with zero
    progress, steps losing progress, and mean per-step progress."""

    wasted_per_episode: float
    backward_per_episode: float
    progress_per_action: float
    episodes: int

    def to_obj(self) -> dict:
        return {
            "wasted_per_episode": self.wasted_per_episode,
            "backward_per_episode": self.backward_per_episode,
            "progress_per_action": self.progress_per_action,
            "episodes": self.episodes,
        }


def _episode_deltas(transcript: EpisodeTranscript) -> list[int]:
    deltas: list[int] = []
    for decision in transcript.decisions:
        if decision.deltas is None:
            raise ValueError(
                "transcript lacks per-step progress; evaluate with "
                "with_progress=True")
        deltas.extend(decision.deltas)
    return deltas


def diagnostics(transcripts: Sequence[EpisodeTranscript],
                solved_filter: Optional[bool] = None) -> DiagnosticsSummary:
    """Aggregate efficiency diagnostics, optionally restricted to solved
    (True) or unsolved (False) episodes."""
    selected = [t for t in transcripts
                if solved_filter is None or t.solved == solved_filter]
    wasted, backward, ppa = [], [], []
    for transcript in selected:
        deltas = _episode_deltas(transcript)
        wasted.append(sum(1 for d in deltas if d == 0))
        backward.append(sum(1 for d in deltas if d < 0))
        if deltas:
            ppa.append(sum(deltas) / len(deltas))
    def mean(xs):
        return sum(xs) / len(xs) if xs else 0.0
    return DiagnosticsSummary(
        wasted_per_episode=mean(wasted),
        backward_per_episode=mean(backward),
        progress_per_action=mean(ppa),
        episodes=len(selected))


@dataclass(frozen=True)
class MetricsSummary:
    solve_rate: float
    mean_actions: float
    mean_decisions: float
    per_h_histogram: dict
    diagnostics: DiagnosticsSummary
    diagnostics_solved: DiagnosticsSummary
    diagnostics_unsolved: DiagnosticsSummary
    episodes: int
    solved_episodes: int
    protocol_errors: int
    budget: dict
    policy: str
    pool_key: str
    notes: str

    def to_obj(self) -> dict:
        return {
            "solve_rate": self.solve_rate,
            "mean_actions": self.mean_actions,
            "mean_decisions": self.mean_decisions,
            "per_h_histogram": self.per_h_histogram,
            "diagnostics": self.diagnostics.to_obj(),
            "diagnostics_solved": self.diagnostics_solved.to_obj(),
            "diagnostics_unsolved": self.diagnostics_unsolved.to_obj(),
            "episodes": self.episodes,
            "solved_episodes": self.solved_episodes,
            "protocol_errors": self.protocol_errors,
            "budget": self.budget,
            "policy": self.policy,
            "pool_key": self.pool_key,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), separators=(",", ":"))


def pool_key(instances: Sequence, budget: Union[Budget, str, dict]) -> str:
    ids = sorted(i.instance_id for i in instances)
    label = _budget_label(budget, [i.task for i in instances])
    payload = json.dumps({"ids": ids, "budget": label}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def summarize(transcripts: Sequence[EpisodeTranscript],
              instances: Sequence,
              spec: PolicySpec,
              budget: Union[Budget, str, dict],
              depth_set: DepthSet = DEFAULT_DEPTHS) -> MetricsSummary:
    depths = effective_depth_set(spec, depth_set)
    solved = sum(1 for t in transcripts if t.solved)
    counts = {h: 0 for h in depths}
    for transcript in transcripts:
        for decision in transcript.decisions:
            counts[decision.commitment.h] += 1
    total_decisions = sum(counts.values())
    histogram = {
        "h": list(depths),
        "freq": [counts[h] / total_decisions if total_decisions else 0.0
                 for h in depths],
        "decisions": total_decisions,
    }
    n = len(transcripts)
    return MetricsSummary(
        solve_rate=solved / n,
        mean_actions=sum(t.clocks.t for t in transcripts) / n,
        mean_decisions=sum(t.clocks.k for t in transcripts) / n,
        per_h_histogram=histogram,
        diagnostics=diagnostics(transcripts),
        diagnostics_solved=diagnostics(transcripts, solved_filter=True),
        diagnostics_unsolved=diagnostics(transcripts, solved_filter=False),
        episodes=n,
        solved_episodes=solved,
        protocol_errors=sum(1 for t in transcripts if t.error),
        budget=_budget_label(budget, [i.task for i in instances]),
        policy=spec.describe(),
        pool_key=pool_key(instances, budget),
        notes="unsolved episodes run to budget exhaustion and are included "
              "in action counts")


def evaluate(spec: PolicySpec, instances: Sequence,
             budget: Union[Budget, str, dict],
             workers: int = 1,
             depth_set: DepthSet = DEFAULT_DEPTHS,
             with_progress: bool = True) -> MetricsSummary:
    """Run the pool and aggregate.  Deterministic for any worker count."""
    transcripts = run_batch(spec, instances, budget, workers=workers,
                            depth_set=depth_set, with_progress=with_progress)
    return summarize(transcripts, instances, spec, budget,
                     depth_set=depth_set)


def pareto_dominates(a: MetricsSummary, b: MetricsSummary) -> bool:
    """True iff a solves at least as much with at most as many actions and
    one of the two is strict.  Requires the same pool and budget."""
    if a.pool_key != b.pool_key:
        raise IncomparablePools(
            f"pool/budget mismatch: {a.pool_key} vs {b.pool_key}")
    if a.solve_rate < b.solve_rate or a.mean_actions > b.mean_actions:
        return False
    return a.solve_rate > b.solve_rate or a.mean_actions < b.mean_actions


def transcript_to_obj(transcript: EpisodeTranscript) -> dict:
    """JSON form of one episode, sufficient for diagnostics recomputation."""
    def d_value(value):
        if value is None:
            return None
        return None if value == float("inf") else int(value)
    return {
        "instance_id": transcript.instance_id,
        "task": transcript.task,
        "solved": transcript.solved,
        "actions_total": transcript.clocks.t,
        "decisions_total": transcript.clocks.k,
        "t_at_decision": list(transcript.clocks.t_at_decision),
        "budget_used": transcript.budget.K_used,
        "budget": transcript.budget.K,
        "error": transcript.error,
        "decisions": [
            {
                "h": d.commitment.h,
                "actions": [a.value for a in d.commitment.actions],
                "executed": len(d.steps),
                "d_before": d_value(d.d_before),
                "d_after": d_value(d.d_after),
                "deltas": list(d.deltas) if d.deltas is not None else None,
            }
            for d in transcript.decisions
        ],
    }
