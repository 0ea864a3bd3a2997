import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import fix_a, fix_c, fix_e, random_cha, random_hat
from popmatch.errors import InstanceError, InvalidMatchingError, ParseError
from popmatch.instance import (
    Instance,
    add_last_resorts,
    ensure_last_resorts,
    format_matching,
    more_popular,
    parse_instance,
    parse_matching,
    phi,
    serialize_instance,
    split_cha_to_hat,
    translate_matching,
    validate_matching,
)
from popmatch.oracle import enumerate_matchings, oracle_is_popular


def test_round_trip_fix_a():
    inst = parse_instance(serialize_instance(fix_a(lr=False)))
    assert inst.kind == "HA"
    assert len(inst.agents) == 2 and len(inst.houses) == 2
    assert inst == fix_a(lr=False)


def test_round_trip_fix_c_capacities():
    inst = parse_instance(serialize_instance(fix_c(lr=False)))
    assert {h: inst.capacity(h) for h in inst.houses} == {"h1": 2, "h2": 1}


def test_round_trip_with_last_resorts():
    inst = fix_a()
    assert parse_instance(serialize_instance(inst)) == inst


def test_bare_ids_and_default_capacity():
    text = '{"kind": "HAT", "agents": ["a"], "houses": ["x", "y"], "preferences": {"a": [["x", "y"]]}}'
    inst = parse_instance(text)
    assert inst.prefs["a"] == (("x", "y"),)
    assert inst.capacity("x") == 1


@pytest.mark.parametrize(
    "body, fragment",
    [
        ({"kind": "HA", "agents": ["a1"], "houses": ["h1"], "preferences": {"a1": ["h1", "h1"]}}, "more than once"),
        ({"kind": "HA", "agents": ["a1"], "houses": ["h1", "h2"], "preferences": {"a1": [["h1", "h2"]]}}, "tie"),
        ({"kind": "CHA", "agents": ["a1"], "houses": ["h1", "h2"], "preferences": {"a1": [["h1", "h2"]]}}, "tie"),
        ({"kind": "CHA", "agents": ["a1"], "houses": [{"id": "h1", "capacity": 0}], "preferences": {"a1": ["h1"]}}, "capacity"),
        ({"kind": "HA", "agents": ["a1"], "houses": [{"id": "h1", "capacity": 2}], "preferences": {"a1": ["h1"]}}, "capacity"),
        ({"kind": "HA", "agents": ["a1"], "houses": ["h1"], "preferences": {"a1": ["h9"]}}, "unknown house"),
        ({"kind": "HA", "agents": ["a1", "a1"], "houses": ["h1"], "preferences": {"a1": ["h1"]}}, "duplicate agent"),
        ({"kind": "HA", "agents": ["a1"], "houses": ["h1", "h1"], "preferences": {"a1": ["h1"]}}, "duplicate house"),
        ({"kind": "HA", "agents": ["a1"], "houses": ["h1"], "preferences": {"a1": []}}, "empty"),
        ({"kind": "HA", "agents": ["a1"], "houses": ["l(a1)"], "preferences": {"a1": ["l(a1)"]}}, "reserved"),
        ({"kind": "XX", "agents": ["a1"], "houses": ["h1"], "preferences": {"a1": ["h1"]}}, "kind"),
        ({"kind": "HA", "agents": ["a 1"], "houses": ["h1"], "preferences": {"a 1": ["h1"]}}, "whitespace"),
    ],
)
def test_invalid_instances(body, fragment):
    with pytest.raises(InstanceError, match=fragment):
        parse_instance(json.dumps(body))


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_instance('{"kind": "HA",\n  "agents": [}')
    assert info.value.line == 2
    assert info.value.column is not None


def test_missing_field():
    with pytest.raises(ParseError, match="preferences"):
        parse_instance('{"kind": "HA", "agents": [], "houses": []}')


def test_explicit_last_resorts_in_file():
    inst = parse_instance(serialize_instance(fix_e()))
    assert inst.last_resorts_added
    assert inst.houses["l(a1)"].is_last_resort


def test_add_last_resorts_fix_a():
    inst = fix_a()
    assert len(inst.houses) == 4
    assert inst.prefs["a1"][-1] == ("l(a1)",)
    assert inst.last_resorts_added


def test_add_last_resorts_fix_e():
    assert fix_e().prefs["a1"] == (("h1",), ("l(a1)",))


def test_add_last_resorts_twice():
    with pytest.raises(InstanceError):
        add_last_resorts(fix_a())
    assert ensure_last_resorts(fix_a()) == fix_a()


def test_phi_examples():
    inst = fix_a()
    m = {"a1": "h1", "a2": "h2"}
    assert phi(inst, m, m) == (0, 0)
    assert phi(inst, m, {"a1": "h2", "a2": "h1"}) == (1, 1)
    assert phi(inst, m, {"a1": "h1"}) == (1, 0)


def test_phi_ties_compare_equal():
    inst = Instance.from_lists("HAT", {"a": [("x", "y")]})
    assert phi(inst, {"a": "x"}, {"a": "y"}) == (0, 0)


def test_phi_rejects_invalid():
    with pytest.raises(InvalidMatchingError):
        phi(fix_a(), {"a1": "h1", "a2": "h1"}, {})


def test_more_popular_examples():
    inst = fix_a()
    m = {"a1": "h1", "a2": "h2"}
    assert more_popular(inst, m, m) == "neither"
    assert more_popular(inst, {"a1": "h1"}, m) == "second"
    assert more_popular(inst, m, {"a1": "h2", "a2": "h1"}) == "neither"


@pytest.mark.parametrize(
    "m, fragment",
    [
        ({"zz": "h1"}, "unknown agent"),
        ({"a1": "h9"}, "not on the list"),
        ({"a1": "h1", "a2": "h1"}, "capacity"),
    ],
)
def test_validate_matching(m, fragment):
    with pytest.raises(InvalidMatchingError, match=fragment):
        validate_matching(fix_a(), m)


def test_validate_matching_capacity_two():
    validate_matching(fix_c(), {"a1": "h1", "a2": "h1"})


def test_matching_text_format():
    m = {"a2": "h1", "a1": "h2"}
    assert format_matching(m) == "a1 h2\na2 h1\n"
    assert parse_matching("# comment\na1 h2\n\na2 h1\n") == m
    with pytest.raises(ParseError):
        parse_matching("a1 h1\na1 h2\n")
    with pytest.raises(ParseError):
        parse_matching("a1\n")


def test_split_fix_c():
    hat, copies = split_cha_to_hat(fix_c(lr=False))
    assert hat.kind == "HAT"
    assert set(hat.houses) == {"h1^1", "h1^2", "h2"}
    assert hat.prefs["a1"] == (("h1^1", "h1^2"), ("h2",))
    assert copies["h1"] == ("h1^1", "h1^2")


def test_split_unit_capacity_is_identity():
    inst = fix_a("CHA", lr=False)
    hat, _ = split_cha_to_hat(inst)
    assert hat.prefs == inst.prefs
    assert set(hat.houses) == set(inst.houses)


def test_split_translates_popular_matching():
    inst = fix_c()
    hat, copies = split_cha_to_hat(inst)
    image = translate_matching(copies, {"a1": "h1", "a2": "h1"})
    assert oracle_is_popular(hat, image)


def test_split_requires_cha():
    with pytest.raises(InstanceError):
        split_cha_to_hat(fix_a())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_round_trip_random(seed, capacitated):
    rng = random.Random(seed)
    inst = random_cha(rng) if capacitated else random_hat(rng, complete=False)
    assert parse_instance(serialize_instance(inst)) == inst


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_more_popular_antisymmetric_and_phi_reflexive(seed):
    rng = random.Random(seed)
    inst = random_hat(rng, max_agents=3, max_houses=3, complete=False)
    ms = list(enumerate_matchings(inst))
    m1, m2 = rng.choice(ms), rng.choice(ms)
    assert phi(inst, m1, m1) == (0, 0)
    flip = {"first": "second", "second": "first", "neither": "neither"}
    assert more_popular(inst, m2, m1) == flip[more_popular(inst, m1, m2)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_split_preserves_capacity_and_matchings(seed):
    inst = random_cha(random.Random(seed), max_agents=3, max_houses=3)
    hat, copies = split_cha_to_hat(inst)
    assert hat.agents == inst.agents
    assert len(hat.houses) == sum(inst.capacity(h) for h in inst.houses)
    for m in enumerate_matchings(inst):
        validate_matching(hat, translate_matching(copies, m))
