"""Counting popular matchings with ties through perfect matchings.

The instance is turned into a balanced bipartite graph ``G'`` built on the
Gallai-Edmonds decomposition of the first-choice graph, padded with dummy
agents that are joined to every Even f- or s-house. Each popular matching
extends to exactly ``|D|!`` perfect matchings of ``G'``, so

    popular count = perfect matchings of G' / |D|!

Perfect matchings are counted exactly with Ryser's formula or estimated by
sequential importance sampling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .bipartite import BipartiteGraph, Label, max_matching
from .errors import (
    ConsistencyError,
    IncompleteListsError,
    InstanceError,
    NoPopularMatchingError,
    SizeLimitError,
)
from .hat import FSLabelsHAT, HouseClass, compute_fs_hat
from .instance import Instance

log = logging.getLogger(__name__)

EXACT_THRESHOLD = 24
_MAX_THRESHOLD = 40
# primes below 2**57: residue * row sum stays below 2**63 for rows of <= 40 entries
_PRIMES = (144115188075855859, 144115188075855847, 144115188075855823, 144115188075855811)


class LeftBlock(str, Enum):
    UL = "Ul"
    OL = "Ol"
    EL = "El"
    D = "D"


class RightBlock(str, Enum):
    UR = "Ur"
    OR = "Or"
    EF = "Ef"
    EFS = "Efs"
    ES = "Es"


@dataclass(frozen=True)
class ReducedInstance:
    graph: BipartiteGraph
    dummy_count: int
    block_of_left: dict
    block_of_right: dict
    removed_houses: frozenset
    labels: FSLabelsHAT


@dataclass(frozen=True)
class CountResult:
    value: object  # int for exact/oracle, float for estimate
    method: str  # "exact", "oracle" or "estimate"
    epsilon: float | None = None
    delta: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.method in ("exact", "oracle") and not isinstance(self.value, int):
            raise TypeError(f"{self.method} counts must be integers")

    def to_dict(self) -> dict:
        return {
            "count": self.value,
            "method": self.method,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
        }


def _fresh(prefix, k, taken):
    while any(f"{prefix}{i}" in taken for i in range(1, k + 1)):
        prefix = "_" + prefix
    return [f"{prefix}{i}" for i in range(1, k + 1)]


def build_reduction(inst: Instance) -> ReducedInstance:
    """Build the perfect-matching instance ``G'`` for a HAT instance.

    Raises :class:`NoPopularMatchingError` when the agents outnumber the
    houses that can appear in a popular matching.
    """
    if not inst.is_complete():
        raise IncompleteListsError(
            "preference lists must be complete: every agent must rank every house "
            "(otherwise the dummy count can be negative)"
        )
    labels = compute_fs_hat(inst)
    dec = labels.decomposition
    part = labels.even_house_partition

    block_r = {}
    for h in inst.houses:
        lab = dec.right[h]
        if lab is Label.UNREACHABLE:
            block_r[h] = RightBlock.UR
        elif lab is Label.ODD:
            block_r[h] = RightBlock.OR
        elif part[h] is not HouseClass.ESTAR:
            block_r[h] = RightBlock(part[h].value)
    removed = frozenset(h for h in inst.houses if h not in block_r)

    dummy_count = (len(inst.houses) - len(removed)) - len(inst.agents)
    if dummy_count < 0:
        # popular matchings put every agent on its own house outside E*,
        # so a deficit here means there are none
        raise NoPopularMatchingError(
            f"{len(inst.agents)} agents but only {len(inst.houses) - len(removed)} usable houses"
        )
    dummies = _fresh("d", dummy_count, set(inst.agents))

    block_l = {}
    edges = set()
    for a in inst.agents:
        lab = dec.left[a]
        if lab is Label.UNREACHABLE:
            block_l[a] = LeftBlock.UL
            edges.update((a, h) for h in labels.f_of_agent[a] if block_r.get(h) is RightBlock.UR)
        elif lab is Label.ODD:
            block_l[a] = LeftBlock.OL
            edges.update(
                (a, h) for h in labels.f_of_agent[a]
                if block_r.get(h) in (RightBlock.EF, RightBlock.EFS)
            )
        else:
            block_l[a] = LeftBlock.EL
            edges.update((a, h) for h in labels.f_of_agent[a] if block_r.get(h) is RightBlock.OR)
            edges.update((a, h) for h in labels.s_of_agent[a])
    free = [h for h, b in block_r.items() if b in (RightBlock.EF, RightBlock.EFS, RightBlock.ES)]
    for d in dummies:
        block_l[d] = LeftBlock.D
        edges.update((d, h) for h in free)

    graph = BipartiteGraph(
        tuple(inst.agents) + tuple(dummies),
        tuple(h for h in inst.houses if h in block_r),
        frozenset(edges),
    )
    return ReducedInstance(graph, dummy_count, block_l, block_r, removed, labels)


# -- exact permanent ------------------------------------------------------------


@njit(cache=True)
def _ryser_mod(a, primes):
    n = a.shape[0]
    k = primes.shape[0]
    lazy = np.int64(1) << 57
    rowsum = np.zeros(n, dtype=np.int64)
    total = np.zeros(k, dtype=np.int64)
    gray = 0
    size = 0
    for step in range(1, 1 << n):
        j = 0
        while not (step >> j) & 1:
            j += 1
        gray ^= 1 << j
        if (gray >> j) & 1:
            size += 1
            for i in range(n):
                rowsum[i] += a[i, j]
        else:
            size -= 1
            for i in range(n):
                rowsum[i] -= a[i, j]
        zero = False
        for i in range(n):
            if rowsum[i] == 0:
                zero = True
                break
        if zero:
            continue
        negative = (n - size) & 1
        for t in range(k):
            p = primes[t]
            prod = np.int64(1)
            for i in range(n):
                # prod < 2**57 and rowsum < 64 keep this below 2**63
                prod *= rowsum[i]
                if prod >= lazy:
                    prod %= p
            prod %= p
            if negative:
                total[t] -= prod
                if total[t] < 0:
                    total[t] += p
            else:
                total[t] += prod
                if total[t] >= p:
                    total[t] -= p
    return total


def _crt(residues, moduli):
    x, mod = 0, 1
    for r, p in zip(residues, moduli):
        t = ((r - x) * pow(mod, -1, p)) % p
        x += mod * t
        mod *= p
    return x


def count_perfect_exact(g: BipartiteGraph, threshold: int = EXACT_THRESHOLD) -> int:
    """Exact number of perfect matchings via Ryser's inclusion-exclusion.

    Column subsets are visited in Gray-code order so each step updates the
    row sums by one column. Sums are reduced modulo 57-bit primes and the
    result is recovered by Chinese remaindering.
    """
    n = len(g.left)
    if n != len(g.right):
        raise InstanceError(f"unbalanced graph: {n} left vs {len(g.right)} right vertices")
    if n > min(threshold, _MAX_THRESHOLD):
        raise SizeLimitError(f"{n} vertices per side exceeds the exact threshold {threshold}")
    if n == 0:
        return 1
    a = g.biadjacency()
    degrees = a.sum(axis=1)
    if not degrees.all() or not a.sum(axis=0).all():
        return 0
    bound = min(math.factorial(n), math.prod(int(d) for d in degrees))
    moduli, mod = [], 1
    for p in _PRIMES:
        moduli.append(p)
        mod *= p
        if mod > bound:
            break
    residues = [int(r) for r in _ryser_mod(a, np.array(moduli, dtype=np.int64))]
    return _crt(residues, moduli)


# -- estimation -------------------------------------------------------------------

_MASK = (1 << 64) - 1
PILOT_SIZE = 256
MIN_BATCH = 200
MAX_BATCH = 200_000
_CHUNK = 20_000
# batch size = SAMPLE_FACTOR * cv^2 / eps^2, so Chebyshev bounds a batch's
# failure probability by 1 / SAMPLE_FACTOR
SAMPLE_FACTOR = 8


def mix_seed(seed: int, index: int) -> int:
    """SplitMix64 finalizer applied to ``seed`` offset by ``index``."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _bregman_table(n):
    # g[r] = log(r!) / r, the per-row factor of the Minc-Bregman bound
    g = np.zeros(n + 2)
    for r in range(1, n + 2):
        g[r] = math.lgamma(r + 1) / r
    return g


def _sis_weights(a: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Importance weights of ``m`` independent samples; their mean is unbiased.

    Rows are assigned in order. A row picks an available neighbour column
    with probability proportional to the Minc-Bregman bound of what remains,
    never leaving a later row without columns.
    """
    n = a.shape[0]
    g = _bregman_table(n)
    af = a.astype(float)
    at = a.T.astype(np.int64)
    avail = np.ones((m, n), dtype=bool)
    deg = np.tile(a.sum(axis=1).astype(np.int64), (m, 1))
    logw = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    rows = np.arange(m)
    for i in range(n):
        rest = af[i + 1:]
        d = deg[:, i + 1:]
        gain = np.where(d >= 2, g[np.maximum(d - 1, 0)] - g[d], 0.0) @ rest
        kill = (d == 1).astype(float) @ rest
        cand = avail & (a[i] == 1) & (kill == 0)
        has = cand.any(axis=1)
        alive &= has
        logits = np.where(cand, gain, -np.inf)
        top = np.where(has, logits.max(axis=1), 0.0)
        p = np.where(cand, np.exp(logits - top[:, None]), 0.0)
        p /= np.where(has, p.sum(axis=1), 1.0)[:, None]
        cdf = np.cumsum(p, axis=1)
        u = rng.random(m)
        j = (cdf < u[:, None]).sum(axis=1)
        last = n - 1 - np.argmax(cand[:, ::-1], axis=1)
        j = np.minimum(j, last)
        live = rows[alive]
        jl = j[alive]
        logw[live] -= np.log(p[live, jl])
        avail[live, jl] = False
        deg[live] -= at[jl]
    return np.where(alive, np.exp(logw), 0.0)


def _sample_mean(a, m, seed):
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    weights = []
    while done < m:
        k = min(_CHUNK, m - done)
        w = _sis_weights(a, k, rng)
        weights.append(w)
        total += w.sum()
        done += k
    return total / m, np.concatenate(weights)


def _row_order(a):
    # fewest choices first keeps the proposal close to uniform-over-matchings
    return np.argsort(a.sum(axis=1), kind="stable")


def estimate_perfect(g: BipartiteGraph, epsilon: float = 0.1, delta: float = 0.1, seed: int = 0) -> CountResult:
    """Estimate the number of perfect matchings of ``g``.

    Median of ``ceil(ln(1/delta))`` batch means; the batch size is chosen
    from a pilot run's coefficient of variation. Deterministic in ``seed``.
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    n = len(g.left)
    if n != len(g.right) or len(max_matching(g)) < n:
        return CountResult(0, "exact")
    if n == 0:
        return CountResult(1, "exact")
    a = g.biadjacency()
    a = a[_row_order(a)]

    pilot_mean, pilot = _sample_mean(a, PILOT_SIZE, mix_seed(seed, 0))
    if pilot_mean > 0:
        cv2 = float(pilot.var() / pilot_mean**2)
        size = math.ceil(SAMPLE_FACTOR * cv2 / epsilon**2)
        size = min(max(size, MIN_BATCH), MAX_BATCH)
    else:
        size = MAX_BATCH
    batches = max(1, math.ceil(math.log(1 / delta)))
    log.debug("estimate_perfect: n=%d batches=%d batch_size=%d", n, batches, size)
    means = [_sample_mean(a, size, mix_seed(seed, b))[0] for b in range(1, batches + 1)]
    return CountResult(float(np.median(means)), "estimate", epsilon, delta, seed)


# -- popular matchings --------------------------------------------------------------


def count_popular_hat(
    inst: Instance,
    mode: str = "exact",
    epsilon: float = 0.1,
    delta: float = 0.1,
    seed: int | None = None,
    threshold: int = EXACT_THRESHOLD,
) -> CountResult:
    """Count popular matchings of a HAT (or HA) instance with last resorts.

    ``mode`` is ``"exact"`` (Ryser on ``G'``), ``"estimate"`` (sampling on
    ``G'``, needs ``seed``) or ``"oracle"`` (brute force).
    """
    if mode == "oracle":
        from .oracle import oracle_count_popular

        return CountResult(oracle_count_popular(inst), "oracle")
    if mode not in ("exact", "estimate"):
        raise ValueError(f"unknown mode {mode!r}")
    try:
        red = build_reduction(inst)
    except NoPopularMatchingError:
        return CountResult(0, "exact")
    scale = math.factorial(red.dummy_count)
    if mode == "exact":
        perfect = count_perfect_exact(red.graph, threshold)
        count, rest = divmod(perfect, scale)
        if rest:
            raise ConsistencyError(f"{perfect} perfect matchings is not a multiple of {red.dummy_count}!")
        return CountResult(count, "exact")
    if seed is None:
        raise ValueError("estimate mode needs an explicit seed")
    est = estimate_perfect(red.graph, epsilon, delta, seed)
    if est.method == "exact":
        return CountResult(est.value // scale, "exact")
    return CountResult(est.value / scale, "estimate", epsilon, delta, seed)


def calibration_family(count: int = 20, seed: int = 20240601) -> list:
    """Fixed test graphs (n from 6 to 16) with a planted perfect matching."""
    rng = np.random.default_rng(seed)
    densities = (0.3, 0.5, 0.7, 0.9)
    graphs = []
    for k in range(count):
        n = 6 + (10 * k) // max(count - 1, 1)
        p = densities[k % len(densities)]
        left = [f"u{i}" for i in range(1, n + 1)]
        right = [f"v{j}" for j in range(1, n + 1)]
        perm = rng.permutation(n)
        edges = {(left[i], right[perm[i]]) for i in range(n)}
        mask = rng.random((n, n)) < p
        edges.update((left[i], right[j]) for i in range(n) for j in range(n) if mask[i, j])
        graphs.append(BipartiteGraph(left, right, frozenset(edges)))
    return graphs
