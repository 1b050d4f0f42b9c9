"""Client SDK for the commitgym external-policy wire protocol (v1)."""

from .client import serve
from .policies import FixedDepth, RandomDepth, solver_actions
from .protocol import (
    Commit,
    Hello,
    Observation,
    ProtocolError,
    SchemaError,
    StreamError,
    ValidationError,
    parse_commit,
    parse_hello,
    parse_observation,
    validate_commitment,
)

__version__ = "0.1.0"

__all__ = [
    "Commit",
    "FixedDepth",
    "Hello",
    "Observation",
    "ProtocolError",
    "RandomDepth",
    "SchemaError",
    "StreamError",
    "ValidationError",
    "parse_commit",
    "parse_hello",
    "parse_observation",
    "serve",
    "solver_actions",
    "validate_commitment",
    "__version__",
]
