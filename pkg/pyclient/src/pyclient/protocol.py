"""Message types for the external-policy wire protocol, version v1.

Everything on the wire is one JSON object per line. The harness opens
with a hello, the client echoes a hello, and from then on each observe
is answered by one commit. Parsing here is strict about the fields the
protocol defines and transparent about the ones it does not: unknown
keys are kept on the message object, so serializing a parsed message
reproduces the original dict exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

VERSION = "v1"

_HELLO_FIELDS = ("type", "v", "task", "instance_id", "episode_seed",
                 "budget", "depths")
_OBSERVE_FIELDS = ("type", "k", "remaining_budget", "task", "state",
                   "render")
_COMMIT_FIELDS = ("type", "h", "actions")

ACTION_CHARS = ("U", "D", "L", "R")


class ProtocolError(Exception):
    """Base for everything this package raises about the wire."""


class SchemaError(ProtocolError):
    """An inbound message does not match the v1 schema."""


class ValidationError(ProtocolError):
    """A policy produced a commitment the protocol would reject."""


class StreamError(ProtocolError):
    """The transport failed mid-message."""


@dataclass
class Hello:
    """Episode opener from the harness."""

    task: str
    instance_id: str
    episode_seed: int
    budget: int
    depths: tuple[int, ...]
    v: str = VERSION
    extra: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        obj = {"type": "hello", "v": self.v, "task": self.task,
               "instance_id": self.instance_id,
               "episode_seed": self.episode_seed, "budget": self.budget,
               "depths": list(self.depths)}
        obj.update(self.extra)
        return obj


@dataclass
class Observation:
    """One decision point: the state as a parsed JSON object, the two
    budget counters, and an optional base64 render."""

    k: int
    remaining_budget: int
    task: str
    state: dict
    render: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        obj: dict[str, Any] = {"type": "observe", "k": self.k,
                               "remaining_budget": self.remaining_budget,
                               "task": self.task, "state": self.state}
        if self.render is not None:
            obj["render"] = self.render
        obj.update(self.extra)
        return obj


@dataclass
class Commit:
    h: int
    actions: tuple[str, ...]
    extra: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        obj = {"type": "commit", "h": self.h, "actions": list(self.actions)}
        obj.update(self.extra)
        return obj


def _require(obj: dict, key: str, kinds, where: str):
    if key not in obj:
        raise SchemaError(f"{where} message missing {key!r}")
    value = obj[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise SchemaError(f"{where} field {key!r} has wrong type "
                          f"{type(value).__name__}")
    return value


def parse_hello(obj: dict) -> Hello:
    if not isinstance(obj, dict):
        raise SchemaError("hello message is not an object")
    if obj.get("type") != "hello":
        raise SchemaError(f"expected hello, got {obj.get('type')!r}")
    v = _require(obj, "v", str, "hello")
    if v != VERSION:
        raise SchemaError(f"unsupported protocol version {v!r}")
    depths = _require(obj, "depths", list, "hello")
    if not depths or not all(
            isinstance(d, int) and not isinstance(d, bool) and d >= 1
            for d in depths):
        raise SchemaError("hello depths must be positive integers")
    return Hello(
        task=_require(obj, "task", str, "hello"),
        instance_id=_require(obj, "instance_id", str, "hello"),
        episode_seed=_require(obj, "episode_seed", int, "hello"),
        budget=_require(obj, "budget", int, "hello"),
        depths=tuple(depths),
        v=v,
        extra={k: v for k, v in obj.items() if k not in _HELLO_FIELDS})


def parse_observation(obj: dict) -> Observation:
    if not isinstance(obj, dict):
        raise SchemaError("observe message is not an object")
    if obj.get("type") != "observe":
        raise SchemaError(f"expected observe, got {obj.get('type')!r}")
    render = obj.get("render")
    if render is not None and not isinstance(render, str):
        raise SchemaError("observe render must be a string")
    return Observation(
        k=_require(obj, "k", int, "observe"),
        remaining_budget=_require(obj, "remaining_budget", int, "observe"),
        task=_require(obj, "task", str, "observe"),
        state=_require(obj, "state", dict, "observe"),
        render=render,
        extra={k: v for k, v in obj.items() if k not in _OBSERVE_FIELDS})


def parse_commit(obj: dict) -> Commit:
    if not isinstance(obj, dict):
        raise SchemaError("commit message is not an object")
    if obj.get("type") != "commit":
        raise SchemaError(f"expected commit, got {obj.get('type')!r}")
    h = _require(obj, "h", int, "commit")
    actions = _require(obj, "actions", list, "commit")
    if not all(isinstance(a, str) for a in actions):
        raise SchemaError("commit actions must be strings")
    return Commit(h=h, actions=tuple(actions),
                  extra={k: v for k, v in obj.items()
                         if k not in _COMMIT_FIELDS})


def hello_reply() -> dict:
    return {"type": "hello", "v": VERSION}


def validate_commitment(h, actions, depths) -> Commit:
    """Client-side gate: everything the harness would reject is refused
    here, before a byte goes out."""
    if not isinstance(h, int) or isinstance(h, bool):
        raise ValidationError(f"depth must be an integer, got {h!r}")
    if h not in depths:
        raise ValidationError(f"depth {h} not in the episode menu "
                              f"{list(depths)}")
    actions = list(actions)
    if len(actions) != h:
        raise ValidationError(f"commitment carries {len(actions)} actions "
                              f"for depth {h}")
    for a in actions:
        if a not in ACTION_CHARS:
            raise ValidationError(f"unknown action character {a!r}")
    return Commit(h=h, actions=tuple(actions))
