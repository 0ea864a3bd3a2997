import logging
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import fix_d, random_graph
from popmatch.bipartite import BipartiteGraph
from popmatch.errors import InstanceError, ParseError
from popmatch.hardness import cross_check, format_graph, parse_graph, reduce_matching_to_cha
from popmatch.instance import ensure_last_resorts
from popmatch.oracle import count_graph_matchings
from popmatch.switching import (
    SwitchingEdge,
    SwitchingSet,
    apply_switching_move,
    build_switching_graph,
    compute_fs_cha,
    decompose_difference,
    enumerate_switching_sets,
    validate_switching_properties,
)

PATH = BipartiteGraph.from_edges([("u1", "v1"), ("u2", "v1")])


def test_fix_d_reduction():
    out = reduce_matching_to_cha(fix_d())
    inst = out.instance
    assert set(inst.houses) == {"u1'", "u1", "v1"}
    assert inst.agents == ("x1", "x2")
    lab = compute_fs_cha(inst)
    assert (lab.f_of_agent["x1"], lab.s_of_agent["x1"], out.base_matching["x1"]) == ("u1", "u1'", "u1'")
    assert (lab.f_of_agent["x2"], lab.s_of_agent["x2"], out.base_matching["x2"]) == ("u1", "v1", "u1")
    assert out.vertex_maps["copy_agent"] == {"u1": "x1"}
    assert out.vertex_maps["edge_agent"] == {("u1", "v1"): "x2"}


@pytest.mark.parametrize(
    "g, matchings",
    [(fix_d(), 2), (PATH, 3), (BipartiteGraph.complete(2), 7)],
)
def test_cross_check_examples(g, matchings):
    report = cross_check(g)
    assert report.ok
    assert report.graph_matchings == report.switching_count == report.oracle_count == matchings
    assert report.reproduces_switching_graph


def test_sizes_and_saturation():
    g = PATH
    out = reduce_matching_to_cha(g)
    n1, n2, m = len(g.left), len(g.right), len(g.edges)
    assert len(out.instance.houses) == 2 * n1 + n2
    assert len(out.instance.agents) == n1 + m
    assert all(len(out.instance.prefs[a]) == 2 for a in out.instance.agents)
    sg = out.switching_graph
    for u in g.left:
        assert sg.unsat[u] == 0 and sg.unsat[f"{u}'"] == 0
    assert all(sg.unsat[v] == 1 for v in g.right)
    assert validate_switching_properties(sg)


def test_switching_graph_reproduced():
    out = reduce_matching_to_cha(BipartiteGraph.complete(2, 3))
    assert build_switching_graph(out.instance, out.base_matching) == out.switching_graph


def test_switching_sets_are_matchings():
    g = BipartiteGraph.complete(2)
    out = reduce_matching_to_cha(g)
    sets = list(enumerate_switching_sets(out.switching_graph))
    assert len(sets) == count_graph_matchings(g)
    edge_of = {a: e for e, a in out.vertex_maps["edge_agent"].items()}
    for s in sets:
        assert s.cycles == ()
        chosen = []
        for p in s.paths:
            assert len(p) == 2
            copy_edge, graph_edge = p
            assert copy_edge.src == f"{copy_edge.dst}'"
            chosen.append(edge_of[graph_edge.agent])
        assert len({u for u, _ in chosen}) == len(chosen) == len({v for _, v in chosen})


def test_two_edge_path_difference():
    g = BipartiteGraph.from_edges([("u1", "v1"), ("u2", "v2")])
    out = reduce_matching_to_cha(g)
    sg = out.switching_graph
    x_copy = out.vertex_maps["copy_agent"]["u1"]
    x_edge = out.vertex_maps["edge_agent"][("u1", "v1")]
    path = (sg.edge_of[x_copy], sg.edge_of[x_edge])
    target, _ = apply_switching_move(sg, SwitchingSet(paths=(path,)))
    s = decompose_difference(sg, target)
    assert s.cycles == () and s.paths == (path,)
    assert path[0] == SwitchingEdge(x_copy, "u1'", "u1", +1)


def test_isolated_vertices_stripped(caplog):
    g = BipartiteGraph(("u1", "u2"), ("v1", "v2"), frozenset({("u1", "v1")}))
    with caplog.at_level(logging.WARNING, logger="popmatch.hardness"):
        out = reduce_matching_to_cha(g)
    assert "u2" in caplog.text and "v2" in caplog.text
    assert set(out.instance.houses) == {"u1'", "u1", "v1"}
    assert cross_check(g).ok


def test_empty_graph():
    g = BipartiteGraph(("u1",), (), frozenset())
    with pytest.raises(InstanceError):
        reduce_matching_to_cha(g)
    report = cross_check(g)
    assert report.degenerate and report.graph_matchings == 1 and report.ok


def test_label_collision():
    g = BipartiteGraph(("x",), ("x",), frozenset({("x", "x")}))
    with pytest.raises(InstanceError):
        reduce_matching_to_cha(g)


def test_parse_graph():
    g = parse_graph("# path\n2 1 2\n1 1\n2 1\n")
    assert g.left == ("u1", "u2") and g.right == ("v1",)
    assert g.edges == {("u1", "v1"), ("u2", "v1")}
    assert parse_graph(format_graph(g)) == g


@pytest.mark.parametrize(
    "text",
    ["", "1 1\n", "1 1 2\n1 1\n", "1 1 1\n2 1\n", "1 1 1\na b\n", "1 2 2\n1 1\n1 1\n", "-1 1 0\n"],
)
def test_parse_graph_errors(text):
    with pytest.raises(ParseError):
        parse_graph(text)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_reduction_counts(seed):
    g = random_graph(random.Random(seed), max_side=3, max_edges=7)
    report = cross_check(g)
    assert report.ok, report
    if g.edges:
        # last resorts never change the fallbacks the construction relies on
        out = reduce_matching_to_cha(g)
        bare = compute_fs_cha(out.instance)
        full = compute_fs_cha(ensure_last_resorts(out.instance))
        assert bare.s_of_agent == full.s_of_agent
