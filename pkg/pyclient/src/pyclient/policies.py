"""Reference policies for protocol conformance runs.

Both take their actions from the harness's own `solve` command, invoked
per decision on the observed state, so they mirror the built-in
solver-backed baselines exactly: FixedDepth always commits h actions,
RandomDepth draws h uniformly from the episode menu using the seed the
harness put in the handshake. When the optimal solution is shorter than
the chosen depth the tail is padded by repeating the last action, which
matches the built-ins and never executes because episodes stop at the
goal.
"""

from __future__ import annotations

import json
import random
import subprocess

from .protocol import Hello, Observation, ValidationError

DEFAULT_SOLVE_COMMAND = ("commitgym", "solve")


def solver_actions(state: dict, h: int,
                   solve_command=DEFAULT_SOLVE_COMMAND) -> list[str]:
    """First h optimal actions for a state, via the solve subcommand."""
    proc = subprocess.run(
        [*solve_command, "--state", json.dumps(state)],
        capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"solve command failed: {proc.stderr.strip()}")
    row = json.loads(proc.stdout.splitlines()[0])
    if row["d"] is None:
        raise RuntimeError("state is unsolvable")
    if row["d"] == 0:
        raise RuntimeError("asked to act in a goal state")
    chars = list(row["actions"])
    take = chars[:h]
    while len(take) < h:
        take.append(take[-1])
    return take


class FixedDepth:
    """Commit the same depth every decision."""

    def __init__(self, h: int, solve_command=DEFAULT_SOLVE_COMMAND):
        self.h = h
        self.solve_command = tuple(solve_command)
        self.depths: tuple[int, ...] = ()

    def on_hello(self, hello: Hello) -> None:
        self.depths = hello.depths
        if self.h not in hello.depths:
            raise ValidationError(
                f"fixed depth {self.h} not offered by the episode menu "
                f"{list(hello.depths)}")

    def __call__(self, obs: Observation):
        return self.h, solver_actions(obs.state, self.h, self.solve_command)


class RandomDepth:
    """Uniform depth draw per decision, seeded from the handshake, so a
    run reproduces the harness's built-in random baseline decision for
    decision."""

    def __init__(self, solve_command=DEFAULT_SOLVE_COMMAND):
        self.solve_command = tuple(solve_command)
        self.rng = random.Random(0)
        self.depths: tuple[int, ...] = ()

    def on_hello(self, hello: Hello) -> None:
        self.rng = random.Random(hello.episode_seed)
        self.depths = hello.depths

    def __call__(self, obs: Observation):
        h = self.depths[self.rng.randrange(len(self.depths))]
        return h, solver_actions(obs.state, h, self.solve_command)
