"""Popular matchings with capacities, via switching graphs.

Every agent ``a`` has a first choice ``f(a)`` and a fallback ``s(a)``; in a
popular matching it holds one of the two. The switching graph of a popular
matching ``M`` has the houses as vertices and one directed edge per agent,
from ``M(a)`` to the other house of ``{f(a), s(a)}``. The edge weighs -1 when
the agent holds its first choice and +1 otherwise.

Reversing a switching set (edge-disjoint alternating cycles plus alternating
paths ending at houses with spare capacity) moves between popular matchings,
and every popular matching is reached this way from any other.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx

from .errors import ConsistencyError, InstanceError, NotPopularError, SwitchingError
from .hat import PopularityVerdict
from .instance import Instance, agents_of, matching_key, validate_matching


@dataclass(frozen=True)
class FSLabelsCHA:
    f_of_agent: dict  # agent -> house
    f_of_house: dict  # house -> frozenset of agents (empty for non-f-houses)
    s_of_agent: dict  # agent -> house

    def is_f_house(self, h) -> bool:
        return bool(self.f_of_house.get(h))


def compute_fs_cha(inst: Instance) -> FSLabelsCHA:
    """First choices and fallbacks for a strict-list instance.

    ``s(a)`` is the best house on ``a``'s list that is either not anyone's
    first choice, or is an under-subscribed first choice of other agents.
    Last resorts guarantee it exists; instances without them are accepted
    when every agent still has one.
    """
    if inst.kind not in ("HA", "CHA"):
        raise InstanceError(f"expected an HA or CHA instance, got {inst.kind}")
    f_a = {a: inst.first_group(a)[0] for a in inst.agents}
    members = {h: set() for h in inst.houses}
    for a, h in f_a.items():
        members[h].add(a)
    f_h = {h: frozenset(v) for h, v in members.items()}
    s_a = {}
    for a in inst.agents:
        for (h,) in inst.prefs[a]:
            if not f_h[h] or (h != f_a[a] and len(f_h[h]) < inst.capacity(h)):
                s_a[a] = h
                break
        else:
            raise InstanceError(f"agent {a!r} has no admissible fallback house; add last resorts")
    return FSLabelsCHA(f_a, f_h, s_a)


def is_popular_cha(inst: Instance, m: dict, labels: FSLabelsCHA | None = None) -> PopularityVerdict:
    validate_matching(inst, m)
    labels = labels or compute_fs_cha(inst)
    held = agents_of(m)
    for h in inst.houses:
        fh = labels.f_of_house[h]
        if not fh:
            continue
        at_h = set(held.get(h, ()))
        if len(fh) <= inst.capacity(h):
            missing = sorted(fh - at_h)
            if missing:
                return PopularityVerdict(
                    False, "f-quota", missing[0], f"{missing[0]} is in f({h}) but not matched to {h}"
                )
        elif len(at_h) != inst.capacity(h) or not at_h <= fh:
            return PopularityVerdict(
                False, "f-quota", h, f"{h} must hold exactly {inst.capacity(h)} agents of f({h})"
            )
    for a in inst.agents:
        if a not in m:
            return PopularityVerdict(False, "agent-complete", a, f"agent {a} is unmatched")
        if m[a] not in (labels.f_of_agent[a], labels.s_of_agent[a]):
            return PopularityVerdict(False, "f-or-s", (a, m[a]), f"{a} holds {m[a]}, neither f(a) nor s(a)")
    return PopularityVerdict(True)


def find_popular_cha(inst: Instance) -> dict | None:
    """A popular matching, or ``None``.

    First-choice groups that fit their house are placed outright. Agents of
    over-subscribed houses compete for the house or fall back to ``s(a)``;
    a max flow decides who falls back subject to the remaining capacities.
    """
    if not inst.last_resorts_added:
        raise InstanceError("last resorts must be added first")
    labels = compute_fs_cha(inst)
    m = {}
    residual = {h: inst.capacity(h) for h in inst.houses}
    contested = []
    for h, fh in labels.f_of_house.items():
        if not fh:
            continue
        if len(fh) <= inst.capacity(h):
            for a in fh:
                m[a] = h
            residual[h] -= len(fh)
        else:
            contested.extend(sorted(fh))

    if contested:
        net = nx.DiGraph()
        for a in contested:
            net.add_edge("source", ("a", a), capacity=1)
            for h in (labels.f_of_agent[a], labels.s_of_agent[a]):
                net.add_edge(("a", a), ("h", h), capacity=1)
        for h, cap in residual.items():
            if ("h", h) in net:
                net.add_edge(("h", h), "sink", capacity=cap)
        value, flow = nx.maximum_flow(net, "source", "sink")
        if value < len(contested):
            return None
        for a in contested:
            m[a] = next(h for (_, h), x in flow[("a", a)].items() if x > 0)
        # fill each contested house to capacity from its own fallen-back agents
        for h, fh in labels.f_of_house.items():
            if len(fh) > inst.capacity(h):
                load = sum(1 for a in fh if m[a] == h)
                for a in sorted(fh):
                    if load >= inst.capacity(h):
                        break
                    if m[a] != h:
                        m[a] = h
                        load += 1

    verdict = is_popular_cha(inst, m, labels)
    if not verdict:
        raise ConsistencyError(f"constructed matching fails the characterization: {verdict.message}")
    return {a: m[a] for a in inst.agents}


# -- switching graphs ----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SwitchingEdge:
    agent: str
    src: str
    dst: str
    weight: int


@dataclass(frozen=True)
class SwitchingGraph:
    houses: tuple
    capacity: dict
    edges: tuple  # one per agent, sorted by agent
    unsat: dict = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        out = Counter(e.src for e in self.edges)
        unsat = {h: self.capacity[h] - out[h] for h in self.houses}
        if self.unsat is not None and dict(self.unsat) != unsat:
            raise SwitchingError("unsaturation degrees disagree with the edge set")
        object.__setattr__(self, "unsat", unsat)

    @cached_property
    def edge_of(self) -> dict:
        return {e.agent: e for e in self.edges}

    @cached_property
    def out_edges(self) -> dict:
        out = {h: [] for h in self.houses}
        for e in self.edges:
            out[e.src].append(e)
        return {h: tuple(v) for h, v in out.items()}

    @cached_property
    def in_edges(self) -> dict:
        inc = {h: [] for h in self.houses}
        for e in self.edges:
            inc[e.dst].append(e)
        return {h: tuple(v) for h, v in inc.items()}

    def matching(self) -> dict:
        return {e.agent: e.src for e in self.edges}

    def is_saturated(self, h) -> bool:
        return self.unsat[h] == 0


def build_switching_graph(inst: Instance, m: dict, labels: FSLabelsCHA | None = None) -> SwitchingGraph:
    labels = labels or compute_fs_cha(inst)
    verdict = is_popular_cha(inst, m, labels)
    if not verdict:
        raise NotPopularError(f"matching is not popular: {verdict.message}")
    edges = []
    for a in inst.agents:
        f, s = labels.f_of_agent[a], labels.s_of_agent[a]
        if m[a] == f:
            edges.append(SwitchingEdge(a, f, s, -1))
        else:
            edges.append(SwitchingEdge(a, s, f, +1))
    capacity = {h: inst.capacity(h) for h in inst.houses}
    return SwitchingGraph(tuple(inst.houses), capacity, tuple(edges))


@dataclass(frozen=True)
class Violation:
    prop: str
    vertex: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_switching_properties(sg: SwitchingGraph) -> ValidationReport:
    """Check the single-graph structural properties P1, P3, P4 and P5."""
    bad = []
    for h in sg.houses:
        out, inc = sg.out_edges[h], sg.in_edges[h]
        if len(out) > sg.capacity[h]:
            bad.append(Violation("P1", h, f"out-degree {len(out)} exceeds capacity {sg.capacity[h]}"))
        plus_in = [e for e in inc if e.weight == +1]
        minus_in = [e for e in inc if e.weight == -1]
        if plus_in and not sg.is_saturated(h):
            bad.append(Violation("P3", h, f"+1 edge of {plus_in[0].agent} ends at an unsaturated vertex"))
        if sg.is_saturated(h) and out and all(e.weight == -1 for e in out) and minus_in:
            bad.append(Violation("P4", h, f"-1 edge of {minus_in[0].agent} enters a vertex saturated by -1 edges"))
        if plus_in:
            plus_out = [e for e in out if e.weight == +1]
            if plus_out:
                bad.append(Violation("P5", h, f"+1 in-edge but +1 out-edge of {plus_out[0].agent}"))
            if minus_in:
                bad.append(Violation("P5", h, f"+1 in-edge and -1 in-edge of {minus_in[0].agent}"))
    return ValidationReport(tuple(bad))


def compare_property2(sg1: SwitchingGraph, sg2: SwitchingGraph) -> ValidationReport:
    """Per-house counts of -1 out-edges and +1 in-edges must agree."""
    bad = []
    for h in sg1.houses:
        a = sum(e.weight == -1 for e in sg1.out_edges[h]), sum(e.weight == +1 for e in sg1.in_edges[h])
        b = sum(e.weight == -1 for e in sg2.out_edges.get(h, ())), sum(e.weight == +1 for e in sg2.in_edges.get(h, ()))
        if a != b:
            bad.append(Violation("P2", h, f"(-1 out, +1 in) = {a} vs {b}"))
    return ValidationReport(tuple(bad))


# -- switching sets -------------------------------------------------------------------


@dataclass(frozen=True)
class SwitchingSet:
    paths: tuple = ()  # tuples of SwitchingEdge, in walk order
    cycles: tuple = ()

    @property
    def edges(self) -> tuple:
        return tuple(e for part in (*self.paths, *self.cycles) for e in part)

    @property
    def agents(self) -> frozenset:
        return frozenset(e.agent for e in self.edges)

    def __len__(self):
        return len(self.paths) + len(self.cycles)


def _alternates(walk) -> bool:
    return all(x.dst == y.src and x.weight == -y.weight for x, y in zip(walk, walk[1:]))


def _is_switching_path(sg, walk) -> bool:
    return (
        bool(walk)
        and walk[0].weight == +1
        and walk[-1].weight == -1
        and _alternates(walk)
        and sg.unsat[walk[-1].dst] > 0
        and len({e.src for e in walk} | {walk[-1].dst}) == len(walk) + 1
    )


def _is_switching_cycle(walk) -> bool:
    return (
        len(walk) >= 2
        and len(walk) % 2 == 0
        and _alternates(walk)
        and walk[-1].dst == walk[0].src
        and walk[-1].weight == -walk[0].weight
        and len({e.src for e in walk}) == len(walk)
    )


def check_switching_set(sg: SwitchingGraph, s: SwitchingSet) -> None:
    """Raise :class:`SwitchingError` unless ``s`` is a switching set of ``sg``."""
    seen = set()
    for e in s.edges:
        if sg.edge_of.get(e.agent) != e:
            raise SwitchingError(f"edge of agent {e.agent!r} is not in the switching graph")
        if e.agent in seen:
            raise SwitchingError(f"edge of agent {e.agent!r} used twice")
        seen.add(e.agent)
    for p in s.paths:
        if not _is_switching_path(sg, p):
            raise SwitchingError(f"not a switching path: {[e.agent for e in p]}")
    for c in s.cycles:
        if not _is_switching_cycle(c):
            raise SwitchingError(f"not a switching cycle: {[e.agent for e in c]}")
    ends = Counter(p[-1].dst for p in s.paths)
    for h, k in ends.items():
        if k > sg.unsat[h]:
            raise SwitchingError(f"{k} switching paths end at {h!r}, unsaturation degree {sg.unsat[h]}")


def _alternating_walks(sg, allowed, start_weight=None):
    """Vertex-simple alternating paths using only agents in ``allowed``.

    Yields edge tuples; starts are tried in sorted vertex order and out-edges
    in agent order.
    """
    out = {h: [e for e in sg.out_edges[h] if e.agent in allowed] for h in sg.houses}

    def extend(path, visited):
        yield tuple(path)
        last = path[-1]
        for e in out[last.dst]:
            if e.weight == -last.weight and e.dst not in visited:
                path.append(e)
                visited.add(e.dst)
                yield from extend(path, visited)
                visited.discard(e.dst)
                path.pop()

    for start in sorted(sg.houses):
        for first in out[start]:
            if start_weight is not None and first.weight != start_weight:
                continue
            if first.dst != start:
                yield from extend([first], {start, first.dst})


def _switching_paths(sg, allowed):
    for walk in _alternating_walks(sg, allowed, start_weight=+1):
        if walk[-1].weight == -1 and sg.unsat[walk[-1].dst] > 0:
            yield walk


def _switching_cycles(sg, allowed):
    """Simple alternating cycles, each reported once from its least agent."""
    out = {h: [e for e in sg.out_edges[h] if e.agent in allowed] for h in sg.houses}
    for first in sorted((e for e in sg.edges if e.agent in allowed), key=lambda e: e.agent):
        start = first.src

        def extend(path, visited):
            last = path[-1]
            for e in out[last.dst]:
                if e.weight != -last.weight or e.agent <= first.agent:
                    continue
                if e.dst == start:
                    if e.weight == -first.weight:
                        yield (*path, e)
                elif e.dst not in visited:
                    path.append(e)
                    visited.add(e.dst)
                    yield from extend(path, visited)
                    visited.discard(e.dst)
                    path.pop()

        if first.dst != start:
            yield from extend([first], {start, first.dst})


def enumerate_switching_sets(sg: SwitchingGraph):
    """Yield every switching set of ``sg`` once, the empty set first.

    Two sets count as the same when they reverse the same edges, since they
    then produce the same matching; each edge set is reported with the first
    decomposition found. Output is ordered by the sorted agent labels of the
    edge set.
    """
    everything = {e.agent for e in sg.edges}
    structures = [("cycle", c) for c in _switching_cycles(sg, everything)]
    structures += [("path", p) for p in _switching_paths(sg, everything)]
    index = {e.agent: i for i, e in enumerate(sg.edges)}
    masks = [sum(1 << index[e.agent] for e in walk) for _, walk in structures]

    found = {}
    chosen = []
    ends = Counter()

    def rec(i, used):
        if i == len(structures):
            if used not in found:
                found[used] = list(chosen)
            return
        rec(i + 1, used)
        kind, walk = structures[i]
        if masks[i] & used:
            return
        end = walk[-1].dst if kind == "path" else None
        if end is not None and ends[end] >= sg.unsat[end]:
            return
        chosen.append(structures[i])
        if end is not None:
            ends[end] += 1
        rec(i + 1, used | masks[i])
        if end is not None:
            ends[end] -= 1
        chosen.pop()

    rec(0, 0)

    def key(mask):
        return tuple(sorted(e.agent for e in sg.edges if mask >> index[e.agent] & 1))

    for mask in sorted(found, key=key):
        parts = found[mask]
        yield SwitchingSet(
            paths=tuple(w for k, w in parts if k == "path"),
            cycles=tuple(w for k, w in parts if k == "cycle"),
        )


def apply_switching_move(sg: SwitchingGraph, s: SwitchingSet) -> tuple:
    """Reverse and re-weight every edge of ``s``; returns ``(graph, matching)``."""
    check_switching_set(sg, s)
    flipped = {e.agent for e in s.edges}
    edges = tuple(
        SwitchingEdge(e.agent, e.dst, e.src, -e.weight) if e.agent in flipped else e
        for e in sg.edges
    )
    out = Counter(e.src for e in edges)
    for h, k in out.items():
        if k > sg.capacity[h]:
            raise SwitchingError(f"move overfills house {h!r}")
    new = SwitchingGraph(sg.houses, sg.capacity, edges)
    return new, new.matching()


def decompose_difference(sg1: SwitchingGraph, sg2: SwitchingGraph) -> SwitchingSet:
    """Split the edges reversed between two switching graphs into a switching set.

    Alternating cycles are peeled off first; the rest is consumed by
    repeatedly removing a longest alternating path (ties broken by the
    agent-label sequence). Each removed path must be a switching path of
    ``sg1``.
    """
    if set(sg1.edge_of) != set(sg2.edge_of) or set(sg1.houses) != set(sg2.houses):
        raise SwitchingError("switching graphs belong to different instances")
    for a, e in sg1.edge_of.items():
        o = sg2.edge_of[a]
        if {e.src, e.dst} != {o.src, o.dst}:
            raise SwitchingError(f"underlying edges differ for agent {a!r}")
    remaining = {a for a, e in sg1.edge_of.items() if sg2.edge_of[a].src != e.src}

    cycles = []
    while True:
        c = next(_switching_cycles(sg1, remaining), None)
        if c is None:
            break
        cycles.append(c)
        remaining -= {e.agent for e in c}

    paths = []
    while remaining:
        best = None
        for walk in _alternating_walks(sg1, remaining):
            if best is None or len(walk) > len(best) or (
                len(walk) == len(best) and [e.agent for e in walk] < [e.agent for e in best]
            ):
                best = walk
        if not _is_switching_path(sg1, best):
            raise SwitchingError(f"longest remaining path is not a switching path: {[e.agent for e in best]}")
        paths.append(best)
        remaining -= {e.agent for e in best}

    result = SwitchingSet(tuple(paths), tuple(cycles))
    check_switching_set(sg1, result)
    return result


# -- counting -------------------------------------------------------------------------


def popular_matchings_cha(inst: Instance) -> list:
    """All popular matchings, generated by switching moves from one of them."""
    start = find_popular_cha(inst)
    if start is None:
        return []
    sg = build_switching_graph(inst, start)
    seen = {}
    for s in enumerate_switching_sets(sg):
        _, m = apply_switching_move(sg, s)
        seen.setdefault(matching_key(m), m)
    return list(seen.values())


def count_popular_cha(inst: Instance) -> int:
    return len(popular_matchings_cha(inst))


def format_switching_graph(sg: SwitchingGraph) -> str:
    lines = ["# src dst weight agent"]
    lines += [f"{e.src} {e.dst} {e.weight:+d} {e.agent}" for e in sg.edges]
    lines.append("# house unsaturation")
    lines += [f"{h} {sg.unsat[h]}" for h in sg.houses]
    return "\n".join(lines) + "\n"
