"""Popular matchings with ties (and the tie-free special case).

The characterization works on the first-choice graph ``G1``: a matching is
popular iff its rank-one part is a maximum matching of ``G1`` and every agent
holds one of its first choices ``f(a)`` or one of its best Even houses
``s(a)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .bipartite import BipartiteGraph, GEDecomposition, Label, first_choice_graph, gallai_edmonds, max_matching
from .errors import ConsistencyError, InstanceError
from .instance import Instance, validate_matching


class HouseClass(str, Enum):
    EF = "Ef"  # f-house, not an s-house
    EFS = "Efs"  # both
    ES = "Es"  # s-house, not an f-house
    ESTAR = "Estar"  # neither


@dataclass(frozen=True)
class FSLabelsHAT:
    f_of_agent: dict
    f_of_house: dict
    s_of_agent: dict
    decomposition: GEDecomposition
    even_house_partition: dict
    first_choice: BipartiteGraph

    @property
    def f_houses(self) -> frozenset:
        return frozenset(h for h, agents in self.f_of_house.items() if agents)

    @property
    def s_houses(self) -> frozenset:
        return frozenset().union(*self.s_of_agent.values())

    def houses_in(self, cls: HouseClass) -> tuple:
        return tuple(h for h, c in self.even_house_partition.items() if c is cls)


@dataclass(frozen=True)
class PopularityVerdict:
    """Outcome of a characterization test; truthy iff popular.

    ``condition`` names the failed clause and ``witness`` is an agent, house
    or ``(agent, house)`` pair showing the failure.
    """

    popular: bool
    condition: str | None = None
    witness: object = None
    message: str = ""

    def __bool__(self):
        return self.popular


def _require_hat(inst: Instance):
    if inst.kind not in ("HA", "HAT"):
        raise InstanceError(f"expected an HA or HAT instance, got {inst.kind}")
    if not inst.last_resorts_added:
        raise InstanceError("last resorts must be added first")


def compute_fs_hat(inst: Instance) -> FSLabelsHAT:
    _require_hat(inst)
    g1 = first_choice_graph(inst)
    dec = gallai_edmonds(g1, max_matching(g1))
    even = {h for h in dec.right_in(Label.EVEN)}

    f_a = {a: frozenset(inst.first_group(a)) for a in inst.agents}
    f_h = {h: frozenset(a for a in inst.agents if h in f_a[a]) for h in inst.houses}
    s_a = {}
    for a in inst.agents:
        for group in inst.prefs[a]:
            hit = frozenset(h for h in group if h in even)
            if hit:
                s_a[a] = hit
                break
        else:
            raise ConsistencyError(f"agent {a!r} has no Even house on its list")

    s_houses = frozenset().union(*s_a.values())
    partition = {}
    for h in inst.houses:
        if h not in even:
            continue
        is_f, is_s = bool(f_h[h]), h in s_houses
        partition[h] = (
            HouseClass.EFS if is_f and is_s
            else HouseClass.EF if is_f
            else HouseClass.ES if is_s
            else HouseClass.ESTAR
        )
    return FSLabelsHAT(f_a, f_h, s_a, dec, partition, g1)


def is_popular_hat(inst: Instance, m: dict, labels: FSLabelsHAT | None = None) -> PopularityVerdict:
    """Test ``m`` against the two-clause characterization."""
    validate_matching(inst, m)
    labels = labels or compute_fs_hat(inst)
    for a in inst.agents:
        if a not in m:
            return PopularityVerdict(False, "agent-complete", a, f"agent {a} is unmatched")

    dec = labels.decomposition
    rank_one = {a: h for a, h in m.items() if h in labels.f_of_agent[a]}
    if len(rank_one) < len(dec.matching):
        covered_h = set(rank_one.values())
        witness = next(
            (h for h, lab in dec.right.items() if lab is not Label.EVEN and h not in covered_h),
            None,
        )
        if witness is None:
            witness = next(
                (a for a, lab in dec.left.items() if lab is not Label.EVEN and a not in rank_one),
                None,
            )
        return PopularityVerdict(
            False,
            "max-first-choice",
            witness,
            f"rank-one part has size {len(rank_one)}, maximum is {len(dec.matching)}",
        )

    for a in inst.agents:
        h = m[a]
        if h not in labels.f_of_agent[a] and h not in labels.s_of_agent[a]:
            return PopularityVerdict(False, "f-or-s", (a, h), f"{a} holds {h}, outside f(a) and s(a)")
    return PopularityVerdict(True)


def restricted_graph(inst: Instance, labels: FSLabelsHAT) -> BipartiteGraph:
    """Edges a popular matching may use.

    Odd and Unreachable agents must be covered by rank-one edges, and no
    maximum matching of ``G1`` uses an Odd-Odd or Odd-Unreachable edge.
    """
    dec = labels.decomposition
    hard = (Label.ODD, Label.UNREACHABLE)
    edges = set()
    for a in inst.agents:
        la = dec.left[a]
        for h in labels.f_of_agent[a]:
            lh = dec.right[h]
            if (la is Label.ODD and lh in hard) or (lh is Label.ODD and la in hard):
                continue
            edges.add((a, h))
        if la is Label.EVEN:
            edges.update((a, h) for h in labels.s_of_agent[a])
    return BipartiteGraph(inst.agents, tuple(inst.houses), frozenset(edges))


def find_popular_hat(inst: Instance) -> dict | None:
    """One popular matching, or ``None`` if the instance admits none."""
    labels = compute_fs_hat(inst)
    g = restricted_graph(inst, labels)
    # growing a maximum matching of G1 keeps every Odd/Unreachable vertex covered
    m = max_matching(g, initial=labels.decomposition.matching)
    if len(m) < len(inst.agents):
        return None
    verdict = is_popular_hat(inst, m, labels)
    if not verdict:
        raise ConsistencyError(f"constructed matching fails the characterization: {verdict.message}")
    return m
