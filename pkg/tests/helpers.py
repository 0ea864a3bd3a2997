"""Fixtures and random generators shared by the test modules."""

import itertools
import random

from popmatch.bipartite import BipartiteGraph
from popmatch.instance import Instance, add_last_resorts


def fix_a(kind="HA", lr=True):
    inst = Instance.from_lists(kind, {"a1": ["h1", "h2"], "a2": ["h1", "h2"]})
    return add_last_resorts(inst) if lr else inst


def fix_b(lr=True):
    inst = Instance.from_lists("HAT", {"a1": [("h1", "h2")], "a2": [("h1", "h2")]})
    return add_last_resorts(inst) if lr else inst


def fix_c(lr=True):
    inst = Instance.from_lists("CHA", {"a1": ["h1", "h2"], "a2": ["h1", "h2"]}, {"h1": 2, "h2": 1})
    return add_last_resorts(inst) if lr else inst


def fix_e(lr=True):
    inst = Instance.from_lists("HA", {"a1": ["h1"]})
    return add_last_resorts(inst) if lr else inst


def fix_d():
    return BipartiteGraph.from_edges([("u1", "v1")])


def weak_orders(items):
    """Every ordered partition of ``items`` into nonempty rank groups."""
    items = list(items)
    if not items:
        yield ()
        return
    for k in range(1, len(items) + 1):
        for first in itertools.combinations(items, k):
            rest = [h for h in items if h not in first]
            for tail in weak_orders(rest):
                yield (first, *tail)


def random_hat(rng: random.Random, max_agents=4, max_houses=4, complete=True, tie_prob=0.4):
    na = rng.randint(1, max_agents)
    nh = rng.randint(1, max_houses)
    houses = [f"h{j}" for j in range(1, nh + 1)]
    prefs = {}
    for i in range(1, na + 1):
        chosen = rng.sample(houses, nh if complete else rng.randint(1, nh))
        groups = [[chosen[0]]]
        for h in chosen[1:]:
            if rng.random() < tie_prob:
                groups[-1].append(h)
            else:
                groups.append([h])
        prefs[f"a{i}"] = [tuple(g) for g in groups]
    return add_last_resorts(Instance.from_lists("HAT", prefs, houses=houses))


def random_cha(rng: random.Random, max_agents=4, max_houses=4, max_capacity=3):
    na = rng.randint(1, max_agents)
    nh = rng.randint(1, max_houses)
    houses = [f"h{j}" for j in range(1, nh + 1)]
    caps = {h: rng.randint(1, max_capacity) for h in houses}
    prefs = {f"a{i}": rng.sample(houses, rng.randint(1, nh)) for i in range(1, na + 1)}
    return add_last_resorts(Instance.from_lists("CHA", prefs, caps, houses))


def random_graph(rng: random.Random, max_side=4, max_edges=10, p=None):
    n1 = rng.randint(1, max_side)
    n2 = rng.randint(1, max_side)
    p = rng.random() if p is None else p
    left = [f"u{i}" for i in range(1, n1 + 1)]
    right = [f"v{j}" for j in range(1, n2 + 1)]
    edges = [(u, v) for u in left for v in right if rng.random() < p]
    rng.shuffle(edges)
    return BipartiteGraph(tuple(left), tuple(right), frozenset(edges[:max_edges]))


def random_square(rng: random.Random, n, p):
    left = [f"u{i}" for i in range(1, n + 1)]
    right = [f"v{j}" for j in range(1, n + 1)]
    edges = [(u, v) for u in left for v in right if rng.random() < p]
    return BipartiteGraph(tuple(left), tuple(right), frozenset(edges))
