"""From bipartite graphs to capacitated house allocation.

Given ``G = (A ∪ B, E)``, build a switching graph on houses ``A' ∪ A ∪ B``:
every edge ``(u, v)`` becomes a -1 edge ``u -> v`` and every left vertex
``u`` gets a copy ``u'`` with a +1 edge ``u' -> u``. Reading an agent off
each edge yields a CHA instance whose popular matchings correspond one to
one with the matchings of ``G``: matching ``(u, v)`` is the switching path
``u' -> u -> v``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .bipartite import BipartiteGraph
from .errors import InstanceError, ParseError
from .instance import Instance, ensure_last_resorts
from .oracle import count_graph_matchings, oracle_count_popular
from .switching import SwitchingEdge, SwitchingGraph, build_switching_graph, count_popular_cha

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionOutput:
    instance: Instance
    base_matching: dict
    switching_graph: SwitchingGraph
    vertex_maps: dict  # "copy", "left", "right": vertex -> house; "copy_agent", "edge_agent"


def copy_house(u: str) -> str:
    return f"{u}'"


def strip_isolated(g: BipartiteGraph) -> BipartiteGraph:
    isolated = [u for u in g.left if not g.adj_left[u]] + [v for v in g.right if not g.adj_right[v]]
    if not isolated:
        return g
    log.warning("dropping isolated vertices %s", ", ".join(map(str, isolated)))
    return BipartiteGraph.from_edges(sorted(g.edges, key=_edge_order(g)))


def _edge_order(g):
    li = {u: i for i, u in enumerate(g.left)}
    ri = {v: i for i, v in enumerate(g.right)}
    return lambda e: (li[e[0]], ri[e[1]])


def reduce_matching_to_cha(g: BipartiteGraph) -> ReductionOutput:
    g = strip_isolated(g)
    if not g.edges:
        raise InstanceError("graph has no edges after removing isolated vertices")
    names = [copy_house(u) for u in g.left] + list(g.left) + list(g.right)
    if len(set(names)) != len(names):
        raise InstanceError("left, right and copy labels must be pairwise distinct")

    edges = []
    copy_agent, edge_agent = {}, {}
    k = 0
    for u in g.left:
        k += 1
        copy_agent[u] = f"x{k}"
        edges.append(SwitchingEdge(f"x{k}", copy_house(u), u, +1))
    for e in sorted(g.edges, key=_edge_order(g)):
        k += 1
        edge_agent[e] = f"x{k}"
        edges.append(SwitchingEdge(f"x{k}", e[0], e[1], -1))

    # saturated houses hold exactly their current agents; right vertices get one spare slot
    capacity = {copy_house(u): 1 for u in g.left}
    capacity.update({u: len(g.adj_left[u]) for u in g.left})
    capacity.update({v: 1 for v in g.right})
    houses = tuple(names)
    sg = SwitchingGraph(houses, capacity, tuple(edges))

    # -1 edges run f(a) -> s(a); +1 edges run s(a) -> f(a)
    prefs, base = {}, {}
    for e in edges:
        f, s = (e.src, e.dst) if e.weight == -1 else (e.dst, e.src)
        prefs[e.agent] = [f, s]
        base[e.agent] = e.src
    agents = sorted(prefs, key=lambda a: int(a[1:]))
    inst = Instance.from_lists("CHA", {a: prefs[a] for a in agents}, capacity, houses)

    maps = {
        "copy": {u: copy_house(u) for u in g.left},
        "left": {u: u for u in g.left},
        "right": {v: v for v in g.right},
        "copy_agent": copy_agent,
        "edge_agent": edge_agent,
    }
    return ReductionOutput(inst, base, sg, maps)


def parse_graph(text: str) -> BipartiteGraph:
    """Edge list: ``n1 n2 m`` then ``m`` lines ``u v`` (1-indexed per side)."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows:
        raise ParseError("empty graph file", 1, 1)

    def ints(lineno, parts, k):
        if len(parts) != k:
            raise ParseError(f"expected {k} integers", lineno, 1)
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise ParseError("expected integers", lineno, 1) from None

    lineno, head = rows[0]
    n1, n2, m = ints(lineno, head, 3)
    if min(n1, n2, m) < 0:
        raise ParseError("header values must be nonnegative", lineno, 1)
    if len(rows) - 1 != m:
        raise ParseError(f"header promises {m} edges, found {len(rows) - 1}", lineno, 1)
    left = [f"u{i}" for i in range(1, n1 + 1)]
    right = [f"v{j}" for j in range(1, n2 + 1)]
    edges = []
    for lineno, parts in rows[1:]:
        u, v = ints(lineno, parts, 2)
        if not (1 <= u <= n1 and 1 <= v <= n2):
            raise ParseError(f"edge ({u}, {v}) out of range", lineno, 1)
        e = (f"u{u}", f"v{v}")
        if e in edges:
            raise ParseError(f"duplicate edge ({u}, {v})", lineno, 1)
        edges.append(e)
    return BipartiteGraph(tuple(left), tuple(right), frozenset(edges))


def format_graph(g: BipartiteGraph) -> str:
    li = {u: i for i, u in enumerate(g.left, 1)}
    ri = {v: i for i, v in enumerate(g.right, 1)}
    lines = [f"{len(g.left)} {len(g.right)} {len(g.edges)}"]
    lines += [f"{li[u]} {ri[v]}" for u, v in sorted(g.edges, key=_edge_order(g))]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CrossCheckReport:
    graph_matchings: int
    switching_count: int | None
    oracle_count: int | None
    reproduces_switching_graph: bool | None
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        if self.degenerate:
            return True
        return (
            self.graph_matchings == self.switching_count == self.oracle_count
            and bool(self.reproduces_switching_graph)
        )

    def to_dict(self) -> dict:
        return {
            "graph_matchings": self.graph_matchings,
            "switching_count": self.switching_count,
            "oracle_count": self.oracle_count,
            "reproduces_switching_graph": self.reproduces_switching_graph,
            "degenerate": self.degenerate,
            "ok": self.ok,
        }


def cross_check(g: BipartiteGraph, limit: int | None = None) -> CrossCheckReport:
    """Compare matchings of ``g`` with popular matchings of its reduction.

    An edgeless graph has exactly one (empty) matching and no reduction; the
    report is marked degenerate.
    """
    count = count_graph_matchings(g)
    if not g.edges:
        return CrossCheckReport(count, None, None, None, degenerate=True)
    out = reduce_matching_to_cha(g)
    rebuilt = build_switching_graph(out.instance, out.base_matching)
    inst = ensure_last_resorts(out.instance)
    return CrossCheckReport(
        count,
        count_popular_cha(inst),
        oracle_count_popular(inst, limit=limit),
        rebuilt == out.switching_graph,
    )
