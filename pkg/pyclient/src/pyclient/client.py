"""The message loop a policy process runs.

serve() owns the whole conversation: it reads the harness hello,
answers it, then feeds each observation to the policy callback and
writes the commitment back, validating client-side so a buggy policy
fails loudly in its own process instead of poisoning the episode. The
loop ends when the harness closes the stream.
"""

from __future__ import annotations

import json
import sys
from typing import Callable, Optional, TextIO

from .protocol import (
    Hello,
    Observation,
    SchemaError,
    StreamError,
    hello_reply,
    parse_hello,
    parse_observation,
    validate_commitment,
)

PolicyCallback = Callable[[Observation], tuple]


def _read_json(line: str, where: str) -> dict:
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"undecodable {where} line: {exc}") from exc


def _write(stream: TextIO, obj: dict) -> None:
    try:
        stream.write(json.dumps(obj) + "\n")
        stream.flush()
    except (BrokenPipeError, ValueError, OSError) as exc:
        raise StreamError(f"cannot write to harness: {exc}") from exc


def serve(policy: PolicyCallback,
          stdin: Optional[TextIO] = None,
          stdout: Optional[TextIO] = None) -> None:
    """Run one episode conversation over the given streams.

    The policy is any callable Observation -> (h, actions). If it also
    has an on_hello(hello) method, that is invoked with the parsed
    handshake before the first observation, which is how the bundled
    policies pick up the episode seed and depth menu.

    Raises SchemaError on inbound messages that break the v1 schema,
    ValidationError on policy output the harness would reject, and
    StreamError when the transport dies mid-conversation. Returns
    normally when the harness closes the stream between messages.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    first = stdin.readline()
    if not first:
        raise StreamError("stream closed before the handshake")
    hello = parse_hello(_read_json(first, "hello"))

    on_hello = getattr(policy, "on_hello", None)
    if on_hello is not None:
        on_hello(hello)

    _write(stdout, hello_reply())

    while True:
        line = stdin.readline()
        if not line:
            return
        obs = parse_observation(_read_json(line, "observe"))
        h, actions = policy(obs)
        commit = validate_commitment(h, actions, hello.depths)
        _write(stdout, commit.to_obj())
