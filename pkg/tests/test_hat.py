import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import fix_a, fix_b, fix_c, fix_e, random_hat
from popmatch.bipartite import Label
from popmatch.errors import InstanceError
from popmatch.hat import HouseClass, compute_fs_hat, find_popular_hat, is_popular_hat
from popmatch.instance import Instance, add_last_resorts, is_agent_complete, matching_key
from popmatch.oracle import enumerate_matchings, oracle_popular_matchings


def test_labels_fix_a():
    lab = compute_fs_hat(fix_a())
    assert lab.f_of_agent == {"a1": {"h1"}, "a2": {"h1"}}
    assert set(lab.decomposition.right_in(Label.EVEN)) == {"h2", "l(a1)", "l(a2)"}
    assert lab.s_of_agent == {"a1": {"h2"}, "a2": {"h2"}}
    assert lab.houses_in(HouseClass.ES) == ("h2",)
    assert set(lab.houses_in(HouseClass.ESTAR)) == {"l(a1)", "l(a2)"}


def test_labels_fix_b():
    lab = compute_fs_hat(fix_b())
    assert lab.f_of_agent["a1"] == {"h1", "h2"}
    assert set(lab.decomposition.right_in(Label.EVEN)) == {"l(a1)", "l(a2)"}
    assert lab.s_of_agent == {"a1": {"l(a1)"}, "a2": {"l(a2)"}}
    assert lab.f_houses == {"h1", "h2"}
    assert lab.s_houses == {"l(a1)", "l(a2)"}


def test_labels_fix_e():
    lab = compute_fs_hat(fix_e())
    assert lab.f_of_agent == {"a1": {"h1"}}
    assert lab.s_of_agent == {"a1": {"l(a1)"}}


def test_s_keeps_only_even_members_of_a_tie():
    # b and c both want x first, so x is Odd; a ties x with y and should get s = {y}
    inst = add_last_resorts(Instance.from_lists("HAT", {"a": ["z", ("x", "y")], "b": ["x"], "c": ["x"]}))
    lab = compute_fs_hat(inst)
    assert lab.decomposition.right["x"] is Label.ODD
    assert lab.s_of_agent["a"] == {"y"}


def test_requires_last_resorts_and_kind():
    with pytest.raises(InstanceError):
        compute_fs_hat(fix_a(lr=False))
    with pytest.raises(InstanceError):
        compute_fs_hat(fix_c())


def test_is_popular_examples():
    assert is_popular_hat(fix_a(), {"a1": "h1", "a2": "h2"})
    v = is_popular_hat(fix_a(), {"a1": "h2", "a2": "l(a2)"})
    assert not v and v.condition == "max-first-choice" and v.witness == "h1"
    assert is_popular_hat(fix_b(), {"a1": "h1", "a2": "h2"})


def test_is_popular_other_failures():
    v = is_popular_hat(fix_a(), {"a1": "h1"})
    assert v.condition == "agent-complete" and v.witness == "a2"
    v = is_popular_hat(fix_a(), {"a1": "h1", "a2": "l(a2)"})
    assert v.condition == "f-or-s" and v.witness == ("a2", "l(a2)")


def test_find_examples():
    assert matching_key(find_popular_hat(fix_a())) in {
        (("a1", "h1"), ("a2", "h2")),
        (("a1", "h2"), ("a2", "h1")),
    }
    m = find_popular_hat(fix_b())
    assert sorted(m.values()) == ["h1", "h2"]
    assert find_popular_hat(fix_e()) == {"a1": "h1"}


def test_find_reports_none():
    # three agents with identical strict lists admit no popular matching
    inst = add_last_resorts(Instance.from_lists("HA", {a: ["x", "y", "z"] for a in ("a", "b", "c")}))
    assert not oracle_popular_matchings(inst)
    assert find_popular_hat(inst) is None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_characterization_matches_oracle(seed, complete):
    inst = random_hat(random.Random(seed), max_agents=3, max_houses=3, complete=complete)
    popular = {matching_key(m) for m in oracle_popular_matchings(inst, method="scan", prune=False)}
    labels = compute_fs_hat(inst)
    for m in enumerate_matchings(inst):
        if not is_agent_complete(inst, m):
            assert matching_key(m) not in popular
            continue
        verdict = is_popular_hat(inst, m, labels)
        assert bool(verdict) == (matching_key(m) in popular)
        if verdict:
            # Odd and Unreachable houses are always filled
            held = set(m.values())
            for h, lab in labels.decomposition.right.items():
                if lab is not Label.EVEN:
                    assert h in held
    found = find_popular_hat(inst)
    assert (found is None) == (not popular)
    if found is not None:
        assert matching_key(found) in popular
