"""Schema parsing and round-trip fidelity for the v1 messages."""

import pytest

from pyclient import (
    SchemaError,
    ValidationError,
    parse_commit,
    parse_hello,
    parse_observation,
    validate_commitment,
)
from pyclient.protocol import hello_reply

HELLO = {"type": "hello", "v": "v1", "task": "sliding",
         "instance_id": "sliding-3x3-d4-s1", "episode_seed": 987654321,
         "budget": 15, "depths": [1, 2, 4, 8]}

OBSERVE = {"type": "observe", "k": 2, "remaining_budget": 13,
           "task": "sliding",
           "state": {"task": "sliding", "n": 3,
                     "tiles": [1, 5, 2, 4, 0, 3, 7, 8, 6]}}

OBSERVE_RENDER = dict(OBSERVE, render="AAAA")

COMMIT = {"type": "commit", "h": 2, "actions": ["U", "L"]}

GOLDENS = [
    (HELLO, parse_hello),
    (dict(HELLO, lab_run="exp-7", note=1), parse_hello),
    (OBSERVE, parse_observation),
    (OBSERVE_RENDER, parse_observation),
    (dict(OBSERVE, trace_id="abc"), parse_observation),
    (COMMIT, parse_commit),
    (dict(COMMIT, confidence=0.4), parse_commit),
]


@pytest.mark.parametrize("golden,parse", GOLDENS,
                         ids=[f"golden{i}" for i in range(len(GOLDENS))])
def test_serialize_after_parse_reproduces_the_message(golden, parse):
    assert parse(golden).to_obj() == golden


def test_hello_fields():
    hello = parse_hello(HELLO)
    assert hello.task == "sliding"
    assert hello.episode_seed == 987654321
    assert hello.budget == 15
    assert hello.depths == (1, 2, 4, 8)
    assert hello.extra == {}


def test_unknown_fields_are_preserved_not_interpreted():
    hello = parse_hello(dict(HELLO, lab_run="exp-7"))
    assert hello.extra == {"lab_run": "exp-7"}
    assert hello.depths == (1, 2, 4, 8)


def test_observation_fields():
    obs = parse_observation(OBSERVE_RENDER)
    assert obs.k == 2
    assert obs.remaining_budget == 13
    assert obs.state["tiles"][0] == 1
    assert obs.render == "AAAA"
    assert parse_observation(OBSERVE).render is None


@pytest.mark.parametrize("mutate,phrase", [
    (lambda o: o.pop("v"), "missing"),
    (lambda o: o.update(v="v2"), "version"),
    (lambda o: o.update(type="howdy"), "expected hello"),
    (lambda o: o.update(episode_seed="7"), "wrong type"),
    (lambda o: o.update(depths=[]), "positive integers"),
    (lambda o: o.update(depths=[1, "2"]), "positive integers"),
    (lambda o: o.update(budget=True), "wrong type"),
])
def test_bad_hello_raises_schema_error(mutate, phrase):
    obj = dict(HELLO)
    mutate(obj)
    with pytest.raises(SchemaError, match=phrase):
        parse_hello(obj)


@pytest.mark.parametrize("mutate,phrase", [
    (lambda o: o.pop("state"), "missing"),
    (lambda o: o.update(state="not-an-object"), "wrong type"),
    (lambda o: o.update(type="commit"), "expected observe"),
    (lambda o: o.update(k="0"), "wrong type"),
    (lambda o: o.update(render=5), "render"),
])
def test_bad_observe_raises_schema_error(mutate, phrase):
    obj = dict(OBSERVE)
    mutate(obj)
    with pytest.raises(SchemaError, match=phrase):
        parse_observation(obj)


def test_hello_reply_shape():
    assert hello_reply() == {"type": "hello", "v": "v1"}


def test_validate_commitment_accepts_exact_fit():
    commit = validate_commitment(2, ["U", "L"], (1, 2, 4, 8))
    assert commit.to_obj() == COMMIT


@pytest.mark.parametrize("h,actions,phrase", [
    (3, ["U", "U", "U"], "not in the episode menu"),
    (4, ["U", "U"], "carries 2 actions"),
    (1, ["Q"], "unknown action character"),
    (True, ["U"], "must be an integer"),
    ("2", ["U", "L"], "must be an integer"),
])
def test_validate_commitment_refuses_bad_output(h, actions, phrase):
    with pytest.raises(ValidationError, match=phrase):
        validate_commitment(h, actions, (1, 2, 4, 8))
