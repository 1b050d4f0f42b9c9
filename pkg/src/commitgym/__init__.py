"""Puzzle benchmark gym for state-conditioned commitment depth.

Environments execute pre-decided action sequences open loop under a
decision budget; exact solvers ground distances, oracles, rewards, and
diagnostics.  Importing the package registers both tasks.
"""

from . import core, datagen, harness, oracle, sliding, sokoban, theory
from .core import (
    Action,
    Budget,
    Commitment,
    DEFAULT_DEPTHS,
    DepthSet,
    EpisodeTranscript,
    GenerationExhausted,
    InvalidDepth,
    LengthMismatch,
    PolicyProtocolError,
    Unsolvable,
    execute_commitment,
    run_episode,
)

# Task operations under their flat, task-prefixed names.
sliding_goal = sliding.goal_state
sliding_step = sliding.step
sliding_solvable = sliding.is_solvable
sliding_solve = sliding.solve
sliding_generate = sliding.generate
sokoban_step = sokoban.step
sokoban_deadlock = sokoban.is_deadlocked
sokoban_solve = sokoban.solve
sokoban_generate = sokoban.generate

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Budget",
    "Commitment",
    "DEFAULT_DEPTHS",
    "DepthSet",
    "EpisodeTranscript",
    "GenerationExhausted",
    "InvalidDepth",
    "LengthMismatch",
    "PolicyProtocolError",
    "Unsolvable",
    "__version__",
    "core",
    "datagen",
    "execute_commitment",
    "harness",
    "oracle",
    "run_episode",
    "sliding",
    "sliding_generate",
    "sliding_goal",
    "sliding_solvable",
    "sliding_solve",
    "sliding_step",
    "sokoban",
    "sokoban_deadlock",
    "sokoban_generate",
    "sokoban_solve",
    "sokoban_step",
    "theory",
]
