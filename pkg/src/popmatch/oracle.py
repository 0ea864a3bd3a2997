"""Brute-force ground truth for popularity and matching counts.

Nothing here uses the structural characterizations; popularity is decided
straight from the definition, either by comparing against every matching
or by maximizing the vote margin over all matchings as an assignment problem.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bipartite import BipartiteGraph
from .errors import SizeLimitError
from .instance import Instance, phi, validate_matching

DEFAULT_LIMIT = 10**7
LIMIT_ENV = "POPMATCH_ORACLE_LIMIT"
# above this many matchings, "auto" switches from pairwise scan to margin
SCAN_THRESHOLD = 50_000
PERFECT_LIMIT = 12


def oracle_limit() -> int:
    raw = os.environ.get(LIMIT_ENV)
    return int(raw) if raw else DEFAULT_LIMIT


def choice_space(inst: Instance) -> int:
    return math.prod(len(inst.rank_of(a)) + 1 for a in inst.agents)


def _listing(inst):
    """Per agent: None followed by its houses in preference order."""
    return [(a, [None, *(h for g in inst.prefs[a] for h in g)]) for a in inst.agents]


def enumerate_matchings(inst: Instance, limit: int | None = None):
    """Yield every matching of ``inst`` once, the empty matching first."""
    limit = oracle_limit() if limit is None else limit
    space = choice_space(inst)
    if space > limit:
        raise SizeLimitError(f"choice space {space} exceeds oracle limit {limit}")
    options = _listing(inst)
    load = {h: 0 for h in inst.houses}
    current = {}

    def rec(i):
        if i == len(options):
            yield dict(current)
            return
        a, opts = options[i]
        for h in opts:
            if h is None:
                yield from rec(i + 1)
            elif load[h] < inst.capacity(h):
                load[h] += 1
                current[a] = h
                yield from rec(i + 1)
                del current[a]
                load[h] -= 1

    yield from rec(0)


def count_matchings(inst: Instance) -> int:
    """Number of matchings, by memoized recursion over house loads."""
    agents = inst.agents
    houses = list(inst.houses)
    index = {h: j for j, h in enumerate(houses)}
    caps = tuple(inst.capacity(h) for h in houses)

    @lru_cache(maxsize=None)
    def rec(i, loads):
        if i == len(agents):
            return 1
        total = rec(i + 1, loads)
        for h in inst.rank_of(agents[i]):
            j = index[h]
            if loads[j] < caps[j]:
                total += rec(i + 1, loads[:j] + (loads[j] + 1,) + loads[j + 1:])
        return total

    return rec(0, (0,) * len(houses))


def oracle_more_popular(inst: Instance, m: dict, limit: int | None = None) -> dict | None:
    """A matching more popular than ``m`` found by exhaustive scan, or None."""
    validate_matching(inst, m)
    for other in enumerate_matchings(inst, limit):
        p, q = phi(inst, other, m)
        if p > q:
            return other
    return None


def oracle_is_popular(inst: Instance, m: dict, limit: int | None = None) -> bool:
    return oracle_more_popular(inst, m, limit) is None


def popularity_margin(inst: Instance, m: dict) -> tuple:
    """Largest ``phi(M', m) - phi(m, M')`` over all matchings ``M'``.

    Solved as a maximum-weight assignment: each agent takes one house slot
    or its private "unmatched" column, scoring +1/0/-1 against its outcome
    in ``m``. Returns ``(margin, best M')``; ``m`` is popular iff margin is 0.
    """
    validate_matching(inst, m)
    agents = inst.agents
    n = len(agents)
    slots = [h for h in inst.houses for _ in range(inst.capacity(h))]
    forbidden = -4 * (n + 1)
    w = np.full((n, len(slots) + n), forbidden, dtype=np.int64)
    for i, a in enumerate(agents):
        r0 = inst.rank(a, m.get(a))
        ranks = inst.rank_of(a)
        for j, h in enumerate(slots):
            if h in ranks:
                r = ranks[h]
                w[i, j] = (r < r0) - (r > r0)
        w[i, len(slots) + i] = 0 if a not in m else -1
    rows, cols = linear_sum_assignment(w, maximize=True)
    margin = int(w[rows, cols].sum())
    best = {agents[i]: slots[j] for i, j in zip(rows, cols) if j < len(slots)}
    return margin, best


def _candidates(inst: Instance, prune: bool, limit: int):
    """Enumerate matchings, optionally skipping ones with an obvious improvement.

    The pruning rule: if a house ends with spare capacity while some agent
    ranks it strictly above its current outcome, moving that agent there
    makes one agent better off and nobody worse off.
    """
    options = _listing(inst)
    position = {a: i for i, (a, _) in enumerate(options)}
    listers = {h: [] for h in inst.houses}
    for a, opts in options:
        for h in opts[1:]:
            listers[h].append(a)
    closes_at = {i: [] for i in range(len(options))}
    for h, who in listers.items():
        if who:
            closes_at[max(position[a] for a in who)].append(h)

    load = {h: 0 for h in inst.houses}
    current = {}
    visited = 0

    def blocked(i):
        for h in closes_at[i]:
            if load[h] < inst.capacity(h):
                for b in listers[h]:
                    if inst.rank(b, h) < inst.rank(b, current.get(b)):
                        return True
        return False

    def rec(i):
        nonlocal visited
        visited += 1
        if visited > limit:
            raise SizeLimitError(f"oracle search exceeded {limit} states")
        if i == len(options):
            yield dict(current)
            return
        a, opts = options[i]
        for h in opts:
            if h is not None:
                if load[h] >= inst.capacity(h):
                    continue
                load[h] += 1
                current[a] = h
            if not (prune and blocked(i)):
                yield from rec(i + 1)
            if h is not None:
                del current[a]
                load[h] -= 1

    yield from rec(0)


def _rank_matrix(inst, matchings):
    big = 1 << 30
    return np.array(
        [[big if a not in m else inst.rank(a, m[a]) for a in inst.agents] for m in matchings],
        dtype=np.int64,
    ).reshape(len(matchings), len(inst.agents))


def oracle_popular_matchings(
    inst: Instance, *, method: str = "auto", prune: bool = True, limit: int | None = None
) -> list:
    """All popular matchings of ``inst`` in enumeration order.

    ``method`` is ``"scan"`` (compare against every matching), ``"margin"``
    (assignment-problem test per candidate) or ``"auto"``.
    """
    limit = oracle_limit() if limit is None else limit
    if method == "auto":
        method = "scan" if choice_space(inst) <= SCAN_THRESHOLD else "margin"
    if method not in ("scan", "margin"):
        raise ValueError(f"unknown oracle method {method!r}")
    candidates = list(_candidates(inst, prune, limit))
    if method == "margin":
        return [m for m in candidates if popularity_margin(inst, m)[0] == 0]
    everything = _rank_matrix(inst, list(enumerate_matchings(inst, limit)))
    cand = _rank_matrix(inst, candidates)
    out = []
    for m, r in zip(candidates, cand):
        better = (everything < r).sum(axis=1)
        worse = (everything > r).sum(axis=1)
        if not np.any(better > worse):
            out.append(m)
    return out


def oracle_count_popular(inst: Instance, **kwargs) -> int:
    return len(oracle_popular_matchings(inst, **kwargs))


def oracle_count_perfect(g: BipartiteGraph) -> int:
    """Perfect matchings by backtracking over left vertices."""
    n = len(g.left)
    if n != len(g.right):
        return 0
    if n > PERFECT_LIMIT:
        raise SizeLimitError(f"oracle_count_perfect supports at most {PERFECT_LIMIT} vertices per side")
    col = {v: j for j, v in enumerate(g.right)}
    nbrs = [[col[v] for v in g.adj_left[u]] for u in g.left]

    @lru_cache(maxsize=None)
    def rec(i, used):
        if i == n:
            return 1
        return sum(rec(i + 1, used | (1 << j)) for j in nbrs[i] if not used >> j & 1)

    return rec(0, 0)


def count_graph_matchings(g: BipartiteGraph) -> int:
    """All matchings of ``g`` including the empty one."""
    col = {v: j for j, v in enumerate(g.right)}
    nbrs = [[col[v] for v in g.adj_left[u]] for u in g.left]

    @lru_cache(maxsize=None)
    def rec(i, used):
        if i == len(nbrs):
            return 1
        return rec(i + 1, used) + sum(
            rec(i + 1, used | (1 << j)) for j in nbrs[i] if not used >> j & 1
        )

    return rec(0, 0)
