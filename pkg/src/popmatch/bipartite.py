"""Bipartite graphs, maximum matchings and the Gallai-Edmonds decomposition."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InstanceError, NotMaximumError

__all__ = [
    "BipartiteGraph",
    "Label",
    "GEDecomposition",
    "max_matching",
    "gallai_edmonds",
    "first_choice_graph",
]


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph with labelled sides.

    Left and right labels live in separate namespaces, so the same string may
    name a vertex on each side.
    """

    left: tuple
    right: tuple
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        object.__setattr__(self, "edges", frozenset(self.edges))
        if len(set(self.left)) != len(self.left) or len(set(self.right)) != len(self.right):
            raise InstanceError("duplicate vertex label on one side of a bipartite graph")
        ls, rs = set(self.left), set(self.right)
        for u, v in self.edges:
            if u not in ls or v not in rs:
                raise InstanceError(f"edge ({u!r}, {v!r}) does not join left to right")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], left=(), right=()) -> "BipartiteGraph":
        """Graph on the given edges; extra (possibly isolated) vertices may be listed."""
        edges = list(edges)
        lo = list(dict.fromkeys([*left, *(u for u, _ in edges)]))
        ro = list(dict.fromkeys([*right, *(v for _, v in edges)]))
        return cls(tuple(lo), tuple(ro), frozenset(edges))

    @classmethod
    def complete(cls, n_left: int, n_right: int | None = None) -> "BipartiteGraph":
        n_right = n_left if n_right is None else n_right
        left = tuple(f"u{i}" for i in range(1, n_left + 1))
        right = tuple(f"v{j}" for j in range(1, n_right + 1))
        return cls(left, right, frozenset((u, v) for u in left for v in right))

    @cached_property
    def adj_left(self) -> dict:
        """Left vertex -> sorted tuple of right neighbours."""
        adj = {u: [] for u in self.left}
        for u, v in self.edges:
            adj[u].append(v)
        order = {v: i for i, v in enumerate(self.right)}
        return {u: tuple(sorted(vs, key=order.__getitem__)) for u, vs in adj.items()}

    @cached_property
    def adj_right(self) -> dict:
        adj = {v: [] for v in self.right}
        for u, v in self.edges:
            adj[v].append(u)
        order = {u: i for i, u in enumerate(self.left)}
        return {v: tuple(sorted(us, key=order.__getitem__)) for v, us in adj.items()}

    def subgraph(self, edges: Iterable[tuple]) -> "BipartiteGraph":
        return BipartiteGraph(self.left, self.right, frozenset(edges))

    def biadjacency(self):
        """0/1 numpy matrix, rows ordered as ``left``, columns as ``right``."""
        import numpy as np

        col = {v: j for j, v in enumerate(self.right)}
        a = np.zeros((len(self.left), len(self.right)), dtype=np.int64)
        for i, u in enumerate(self.left):
            for v in self.adj_left[u]:
                a[i, col[v]] = 1
        return a


def max_matching(g: BipartiteGraph, initial: Mapping | None = None) -> dict:
    """Maximum matching of ``g`` as a ``{left: right}`` dict (Hopcroft-Karp).

    When ``initial`` is given it must be a matching of ``g``; it is grown by
    augmenting paths, so every vertex it covers stays covered.
    """
    mate_l = {u: None for u in g.left}
    mate_r = {v: None for v in g.right}
    for u, v in (initial or {}).items():
        if (u, v) not in g.edges:
            raise InstanceError(f"initial pair ({u!r}, {v!r}) is not an edge")
        if mate_l[u] is not None or mate_r[v] is not None:
            raise InstanceError("initial assignment is not a matching")
        mate_l[u], mate_r[v] = v, u
    adj = g.adj_left
    inf = len(g.left) + 1

    while True:
        # BFS layers from free left vertices
        dist = {}
        queue = deque()
        for u in g.left:
            if mate_l[u] is None:
                dist[u] = 0
                queue.append(u)
        found = inf
        while queue:
            u = queue.popleft()
            if dist[u] >= found:
                continue
            for v in adj[u]:
                w = mate_r[v]
                if w is None:
                    found = min(found, dist[u] + 1)
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if found == inf:
            break

        # vertex-disjoint shortest augmenting paths, iterative DFS
        dead = set()
        for root in g.left:
            if mate_l[root] is not None:
                continue
            stack = [(root, iter(adj[root]))]
            via = []  # via[i]: right vertex taken out of stack[i]
            while stack:
                u, it = stack[-1]
                for v in it:
                    w = mate_r[v]
                    if w is None:
                        if dist[u] + 1 == found:
                            via.append(v)
                            for (x, _), y in zip(stack, via):
                                mate_l[x] = y
                                mate_r[y] = x
                            dead.update(x for x, _ in stack)
                            stack = []
                            break
                    elif w not in dead and dist.get(w) == dist[u] + 1:
                        via.append(v)
                        stack.append((w, iter(adj[w])))
                        break
                else:
                    dead.add(u)
                    stack.pop()
                    if via:
                        via.pop()
    return {u: v for u, v in mate_l.items() if v is not None}


class Label(str, Enum):
    EVEN = "Even"
    ODD = "Odd"
    UNREACHABLE = "Unreachable"


@dataclass(frozen=True)
class GEDecomposition:
    """Even/Odd/Unreachable labels for both sides plus the matching used."""

    left: dict
    right: dict
    matching: dict

    def left_in(self, label: Label) -> tuple:
        return tuple(u for u, lab in self.left.items() if lab is label)

    def right_in(self, label: Label) -> tuple:
        return tuple(v for v, lab in self.right.items() if lab is label)

    def count(self, label: Label) -> int:
        return len(self.left_in(label)) + len(self.right_in(label))


def _check_matching(g: BipartiteGraph, m: Mapping) -> dict:
    mate_r = {}
    for u, v in m.items():
        if (u, v) not in g.edges:
            raise InstanceError(f"pair ({u!r}, {v!r}) is not an edge of the graph")
        if v in mate_r:
            raise InstanceError(f"right vertex {v!r} matched twice")
        mate_r[v] = u
    return mate_r


def gallai_edmonds(g: BipartiteGraph, m: Mapping) -> GEDecomposition:
    """Label vertices by alternating-path reachability from unmatched vertices.

    A vertex is Even (Odd) if some alternating path of even (odd) length
    starts at an unmatched vertex and ends there; unmatched vertices are Even
    via the empty path. Raises :class:`NotMaximumError` when ``m`` admits an
    augmenting path, which shows up as a vertex reachable with both parities.
    """
    mate_r = _check_matching(g, m)
    mate_l = dict(m)
    mate = {("L", u): ("R", v) for u, v in mate_l.items()}
    mate.update({("R", v): ("L", u) for v, u in mate_r.items()})

    def neighbours(x):
        side, label = x
        if side == "L":
            return [("R", v) for v in g.adj_left[label]]
        return [("L", u) for u in g.adj_right[label]]

    even, odd = set(), set()
    queue = deque()
    for x in [("L", u) for u in g.left] + [("R", v) for v in g.right]:
        if x not in mate:
            even.add(x)
            queue.append((x, 0))
    while queue:
        x, parity = queue.popleft()
        if parity == 0:
            for y in neighbours(x):
                if mate.get(x) != y and y not in odd:
                    odd.add(y)
                    queue.append((y, 1))
        else:
            z = mate.get(x)
            if z is not None and z not in even:
                even.add(z)
                queue.append((z, 0))
    both = even & odd
    if both:
        side, label = min(both)
        raise NotMaximumError(f"matching is not maximum: {label!r} lies on an augmenting path")

    def label_of(x):
        if x in even:
            return Label.EVEN
        if x in odd:
            return Label.ODD
        return Label.UNREACHABLE

    return GEDecomposition(
        left={u: label_of(("L", u)) for u in g.left},
        right={v: label_of(("R", v)) for v in g.right},
        matching=dict(m),
    )


def first_choice_graph(inst) -> BipartiteGraph:
    """Agents on the left, all houses on the right, rank-one edges only."""
    edges = frozenset((a, h) for a in inst.agents for h in inst.first_group(a))
    return BipartiteGraph(inst.agents, tuple(inst.houses), edges)
