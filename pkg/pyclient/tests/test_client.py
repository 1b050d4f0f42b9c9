"""The serve loop, driven over in-memory streams."""

import io
import json

import pytest

from pyclient import SchemaError, StreamError, ValidationError, serve

HELLO_LINE = json.dumps({
    "type": "hello", "v": "v1", "task": "sliding", "instance_id": "i-1",
    "episode_seed": 42, "budget": 5, "depths": [1, 2, 4, 8]}) + "\n"


def observe_line(k):
    return json.dumps({
        "type": "observe", "k": k, "remaining_budget": 5 - k,
        "task": "sliding",
        "state": {"task": "sliding", "n": 3,
                  "tiles": [1, 2, 0, 4, 5, 3, 7, 8, 6]}}) + "\n"


def run_serve(policy, inbound):
    out = io.StringIO()
    serve(policy, stdin=io.StringIO(inbound), stdout=out)
    return [json.loads(line) for line in out.getvalue().splitlines()]


def test_handshake_then_commits_then_clean_eof():
    seen = []

    def policy(obs):
        seen.append(obs.k)
        return 1, ["U"]

    lines = run_serve(policy, HELLO_LINE + observe_line(0) + observe_line(1))
    assert lines[0] == {"type": "hello", "v": "v1"}
    assert lines[1:] == [{"type": "commit", "h": 1, "actions": ["U"]},
                         {"type": "commit", "h": 1, "actions": ["U"]}]
    assert seen == [0, 1]


def test_on_hello_hook_receives_the_handshake():
    class Policy:
        def __init__(self):
            self.hello = None

        def on_hello(self, hello):
            self.hello = hello

        def __call__(self, obs):
            return 2, ["U", "L"]

    policy = Policy()
    run_serve(policy, HELLO_LINE + observe_line(0))
    assert policy.hello.episode_seed == 42
    assert policy.hello.depths == (1, 2, 4, 8)


def test_eof_right_after_handshake_is_a_zero_decision_episode():
    lines = run_serve(lambda obs: (1, ["U"]), HELLO_LINE)
    assert lines == [{"type": "hello", "v": "v1"}]


def test_bad_callback_output_is_refused_before_sending():
    out = io.StringIO()
    with pytest.raises(ValidationError, match="carries 2 actions"):
        serve(lambda obs: (4, ["U", "U"]),
              stdin=io.StringIO(HELLO_LINE + observe_line(0)), stdout=out)
    sent = out.getvalue().splitlines()
    assert len(sent) == 1 and json.loads(sent[0])["type"] == "hello"


def test_depth_outside_menu_is_refused_client_side():
    with pytest.raises(ValidationError, match="not in the episode menu"):
        serve(lambda obs: (3, ["U", "U", "U"]),
              stdin=io.StringIO(HELLO_LINE + observe_line(0)),
              stdout=io.StringIO())


def test_empty_stream_raises_stream_error():
    with pytest.raises(StreamError, match="before the handshake"):
        serve(lambda obs: (1, ["U"]), stdin=io.StringIO(""),
              stdout=io.StringIO())


def test_undecodable_inbound_line_raises_schema_error():
    with pytest.raises(SchemaError, match="undecodable"):
        serve(lambda obs: (1, ["U"]),
              stdin=io.StringIO(HELLO_LINE + "{nope\n"),
              stdout=io.StringIO())


def test_wrong_first_message_raises_schema_error():
    with pytest.raises(SchemaError, match="expected hello"):
        serve(lambda obs: (1, ["U"]), stdin=io.StringIO(observe_line(0)),
              stdout=io.StringIO())


def test_unknown_observe_fields_reach_the_policy():
    captured = {}

    def policy(obs):
        captured.update(obs.extra)
        return 1, ["U"]

    extra = json.loads(observe_line(0))
    extra["trace_id"] = "t-99"
    run_serve(policy, HELLO_LINE + json.dumps(extra) + "\n")
    assert captured == {"trace_id": "t-99"}
