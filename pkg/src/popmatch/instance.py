"""House allocation instances, matchings and popularity comparison.

An instance has agents, houses with capacities and one preference list per
agent. A preference list is a sequence of rank groups; a group with more than
one house is a tie. Three kinds are supported:

* ``HA``: strict lists, unit capacities,
* ``HAT``: ties allowed, unit capacities,
* ``CHA``: strict lists, arbitrary positive capacities.

Matchings are plain ``dict`` objects mapping agent labels to house labels.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InstanceError, InvalidMatchingError, ParseError

KINDS = ("HA", "HAT", "CHA")
LAST_RESORT_PREFIX = "l("

Matching = dict  # agent -> house


def last_resort_label(agent: str) -> str:
    return f"{LAST_RESORT_PREFIX}{agent})"


@dataclass(frozen=True)
class House:
    id: str
    capacity: int = 1
    is_last_resort: bool = False


def _check_label(label, what):
    if not isinstance(label, str) or not label:
        raise InstanceError(f"{what} label must be a nonempty string, got {label!r}")
    if any(ch.isspace() for ch in label):
        raise InstanceError(f"{what} label {label!r} contains whitespace")


@dataclass(frozen=True)
class Instance:
    kind: str
    agents: tuple
    houses: dict  # house id -> House, in declaration order
    prefs: dict  # agent -> tuple of rank groups (tuples of house ids)
    last_resorts_added: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InstanceError(f"unknown instance kind {self.kind!r}")
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(
            self, "prefs", {a: tuple(tuple(g) for g in gs) for a, gs in self.prefs.items()}
        )
        self._validate()

    def _validate(self):
        if len(set(self.agents)) != len(self.agents):
            dup = [a for a, n in Counter(self.agents).items() if n > 1]
            raise InstanceError(f"duplicate agent identifier {dup[0]!r}")
        for a in self.agents:
            _check_label(a, "agent")
        for hid, house in self.houses.items():
            _check_label(hid, "house")
            if house.id != hid:
                raise InstanceError(f"house key {hid!r} does not match id {house.id!r}")
            if not isinstance(house.capacity, int) or house.capacity < 1:
                raise InstanceError(f"house {hid!r} has capacity {house.capacity!r}; must be >= 1")
            if house.capacity != 1 and self.kind != "CHA":
                raise InstanceError(f"house {hid!r} has capacity {house.capacity} in a {self.kind} instance")
            if house.is_last_resort and house.capacity != 1:
                raise InstanceError(f"last-resort house {hid!r} must have capacity 1")
            if hid.startswith(LAST_RESORT_PREFIX) and not house.is_last_resort:
                raise InstanceError(f"house label {hid!r} uses the reserved prefix {LAST_RESORT_PREFIX!r}")
        extra = set(self.prefs) - set(self.agents)
        if extra:
            raise InstanceError(f"preferences given for unknown agent {sorted(extra)[0]!r}")
        for a in self.agents:
            groups = self.prefs.get(a)
            if not groups:
                raise InstanceError(f"agent {a!r} has an empty preference list")
            seen = set()
            for g in groups:
                if not g:
                    raise InstanceError(f"agent {a!r} has an empty rank group")
                if len(g) > 1 and self.kind != "HAT":
                    raise InstanceError(f"agent {a!r} has a tie {list(g)} in a {self.kind} instance")
                for h in g:
                    if h not in self.houses:
                        raise InstanceError(f"agent {a!r} lists unknown house {h!r}")
                    if h in seen:
                        raise InstanceError(f"agent {a!r} lists house {h!r} more than once")
                    seen.add(h)
        lr_houses = {h for h, house in self.houses.items() if house.is_last_resort}
        if self.last_resorts_added:
            expected = {last_resort_label(a) for a in self.agents}
            if lr_houses != expected:
                raise InstanceError("last-resort houses do not match the agent set")
            for a in self.agents:
                lr = last_resort_label(a)
                if self.prefs[a][-1] != (lr,):
                    raise InstanceError(f"agent {a!r} does not end with its last resort {lr!r}")
                for b in self.agents:
                    if b != a and lr in self.rank_of(b):
                        raise InstanceError(f"last resort {lr!r} appears on the list of {b!r}")
        elif lr_houses:
            raise InstanceError("last-resort houses present but last_resorts_added is false")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_lists(
        cls,
        kind: str,
        prefs: Mapping[str, Iterable],
        capacities: Mapping[str, int] | None = None,
        houses: Iterable[str] | None = None,
    ) -> "Instance":
        """Build an instance from ``{agent: [h, (h, h), ...]}``.

        Bare strings are singleton groups; lists or tuples are ties. Houses
        not named in ``capacities`` or ``houses`` are added in order of first
        appearance with capacity 1.
        """
        capacities = dict(capacities or {})
        order = list(houses or [])
        order.extend(h for h in capacities if h not in order)
        groups = {}
        for a, plist in prefs.items():
            gs = []
            for entry in plist:
                g = (entry,) if isinstance(entry, str) else tuple(entry)
                gs.append(g)
                order.extend(h for h in g if h not in order)
            groups[a] = tuple(gs)
        house_map = {}
        for h in order:
            if h not in house_map:
                house_map[h] = House(h, capacities.get(h, 1))
        return cls(kind, tuple(prefs), house_map, groups)

    # -- queries --------------------------------------------------------------

    @cached_property
    def _ranks(self):
        return {
            a: {h: i for i, g in enumerate(self.prefs[a]) for h in g}
            for a in self.agents
        }

    def rank_of(self, agent: str) -> dict:
        """Map house -> rank-group index on ``agent``'s list (0 is best)."""
        return self._ranks[agent]

    def rank(self, agent: str, house: str | None) -> float:
        """Rank of ``house`` for ``agent``; ``inf`` for unmatched."""
        if house is None:
            return math.inf
        return self._ranks[agent][house]

    def first_group(self, agent: str) -> tuple:
        return self.prefs[agent][0]

    def capacity(self, house: str) -> int:
        return self.houses[house].capacity

    @property
    def real_houses(self) -> tuple:
        return tuple(h for h, house in self.houses.items() if not house.is_last_resort)

    @property
    def is_strict(self) -> bool:
        return all(len(g) == 1 for a in self.agents for g in self.prefs[a])

    def is_complete(self) -> bool:
        """True if every agent ranks every non-last-resort house."""
        real = set(self.real_houses)
        return all(real <= set(self._ranks[a]) for a in self.agents)

    def with_kind(self, kind: str) -> "Instance":
        return Instance(kind, self.agents, self.houses, self.prefs, self.last_resorts_added)


# -- last resorts ---------------------------------------------------------------


def add_last_resorts(inst: Instance) -> Instance:
    """Append a private lowest-ranked house ``l(a)`` to every agent's list."""
    if inst.last_resorts_added:
        raise InstanceError("last resorts have already been added")
    houses = dict(inst.houses)
    prefs = {}
    for a in inst.agents:
        lr = last_resort_label(a)
        if lr in houses:
            raise InstanceError(f"house label {lr!r} is reserved for a last resort")
        houses[lr] = House(lr, 1, is_last_resort=True)
        prefs[a] = inst.prefs[a] + ((lr,),)
    return Instance(inst.kind, inst.agents, houses, prefs, last_resorts_added=True)


def ensure_last_resorts(inst: Instance) -> Instance:
    return inst if inst.last_resorts_added else add_last_resorts(inst)


# -- matchings --------------------------------------------------------------


def validate_matching(inst: Instance, m: Mapping[str, str]) -> None:
    """Raise :class:`InvalidMatchingError` unless ``m`` is a matching of ``inst``."""
    loads = Counter()
    for a, h in m.items():
        if a not in inst.prefs:
            raise InvalidMatchingError(f"unknown agent {a!r} in matching")
        if h not in inst.rank_of(a):
            raise InvalidMatchingError(f"house {h!r} is not on the list of {a!r}")
        loads[h] += 1
    for h, n in loads.items():
        if n > inst.capacity(h):
            raise InvalidMatchingError(f"house {h!r} holds {n} agents, capacity {inst.capacity(h)}")


def house_loads(m: Mapping[str, str]) -> Counter:
    return Counter(m.values())


def agents_of(m: Mapping[str, str]) -> dict:
    """House -> sorted tuple of agents assigned to it."""
    out = {}
    for a, h in sorted(m.items()):
        out.setdefault(h, []).append(a)
    return {h: tuple(v) for h, v in out.items()}


def matching_key(m: Mapping[str, str]) -> tuple:
    """Hashable canonical form of a matching."""
    return tuple(sorted(m.items()))


def is_agent_complete(inst: Instance, m: Mapping[str, str]) -> bool:
    return all(a in m for a in inst.agents)


def phi(inst: Instance, m: Mapping[str, str], m2: Mapping[str, str]) -> tuple:
    """Return ``(agents preferring m, agents preferring m2)``."""
    validate_matching(inst, m)
    validate_matching(inst, m2)
    first = second = 0
    for a in inst.agents:
        r1 = inst.rank(a, m.get(a))
        r2 = inst.rank(a, m2.get(a))
        if r1 < r2:
            first += 1
        elif r2 < r1:
            second += 1
    return first, second


def more_popular(inst: Instance, m: Mapping[str, str], m2: Mapping[str, str]) -> str:
    """``"first"`` if m is more popular than m2, ``"second"`` for the converse, else ``"neither"``."""
    p, q = phi(inst, m, m2)
    if p > q:
        return "first"
    if q > p:
        return "second"
    return "neither"


# -- capacitated -> ties ----------------------------------------------------------


def copy_label(house: str, i: int) -> str:
    return f"{house}^{i}"


def split_cha_to_hat(inst: Instance) -> tuple:
    """Replace each house of capacity c by c unit houses tied together.

    Returns ``(hat_instance, copy_map)`` where ``copy_map[h]`` lists the unit
    copies of ``h`` (just ``(h,)`` when the capacity is 1).
    """
    if inst.kind != "CHA":
        raise InstanceError(f"expected a CHA instance, got {inst.kind}")
    copy_map = {}
    houses = {}
    for hid, house in inst.houses.items():
        if house.capacity == 1:
            copies = (hid,)
        else:
            copies = tuple(copy_label(hid, i) for i in range(1, house.capacity + 1))
        copy_map[hid] = copies
        for c in copies:
            if c in houses or (c != hid and c in inst.houses):
                raise InstanceError(f"copy label {c!r} collides with an existing house")
            houses[c] = House(c, 1, house.is_last_resort)
    prefs = {
        a: tuple(tuple(c for h in g for c in copy_map[h]) for g in inst.prefs[a])
        for a in inst.agents
    }
    hat = Instance("HAT", inst.agents, houses, prefs, inst.last_resorts_added)
    return hat, copy_map


def translate_matching(copy_map: Mapping[str, tuple], m: Mapping[str, str]) -> dict:
    """Map a matching of a CHA instance onto its split HAT image."""
    used = Counter()
    out = {}
    for a, h in sorted(m.items()):
        copies = copy_map[h]
        if used[h] >= len(copies):
            raise InvalidMatchingError(f"house {h!r} over capacity")
        out[a] = copies[used[h]]
        used[h] += 1
    return out


# -- text formats -------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    data = {
        "kind": inst.kind,
        "agents": list(inst.agents),
        "houses": [{"id": h.id, "capacity": h.capacity} for h in inst.houses.values()],
        "preferences": {
            a: [g[0] if len(g) == 1 else list(g) for g in inst.prefs[a]]
            for a in inst.agents
        },
    }
    if inst.last_resorts_added:
        data["last_resorts"] = True
    return data


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def _expect(cond, message):
    if not cond:
        raise ParseError(message)


def instance_from_dict(data) -> Instance:
    _expect(isinstance(data, dict), "top level must be an object")
    unknown = set(data) - {"kind", "agents", "houses", "preferences", "last_resorts"}
    _expect(not unknown, f"unknown field(s) {sorted(unknown)}")
    for key in ("kind", "agents", "houses", "preferences"):
        _expect(key in data, f"missing field {key!r}")
    agents = data["agents"]
    _expect(isinstance(agents, list), "'agents' must be an array")
    lr_flag = data.get("last_resorts", False)
    _expect(isinstance(lr_flag, bool), "'last_resorts' must be a boolean")
    _expect(isinstance(data["houses"], list), "'houses' must be an array")
    lr_labels = {last_resort_label(a) for a in agents if isinstance(a, str)} if lr_flag else set()
    houses = {}
    for entry in data["houses"]:
        if isinstance(entry, str):
            entry = {"id": entry}
        _expect(isinstance(entry, dict) and "id" in entry, f"bad house entry {entry!r}")
        hid = entry["id"]
        cap = entry.get("capacity", 1)
        _expect(isinstance(cap, int) and not isinstance(cap, bool), f"capacity of {hid!r} must be an integer")
        if hid in houses:
            raise InstanceError(f"duplicate house identifier {hid!r}")
        if isinstance(hid, str) and hid.startswith(LAST_RESORT_PREFIX) and hid not in lr_labels:
            raise InstanceError(f"house label {hid!r} uses the reserved prefix {LAST_RESORT_PREFIX!r}")
        houses[hid] = House(hid, cap, hid in lr_labels)
    prefs_raw = data["preferences"]
    _expect(isinstance(prefs_raw, dict), "'preferences' must be an object")
    prefs = {}
    for a, plist in prefs_raw.items():
        _expect(isinstance(plist, list), f"preferences of {a!r} must be an array")
        groups = []
        for g in plist:
            if isinstance(g, str):
                groups.append((g,))
            else:
                _expect(isinstance(g, list) and all(isinstance(h, str) for h in g), f"bad rank group {g!r} for {a!r}")
                groups.append(tuple(g))
        prefs[a] = tuple(groups)
    for a in agents:
        _expect(a in prefs, f"agent {a!r} has no preference list")
    return Instance(data["kind"], tuple(agents), houses, prefs, lr_flag)


def parse_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return instance_from_dict(data)


def format_matching(m: Mapping[str, str]) -> str:
    return "".join(f"{a} {h}\n" for a, h in sorted(m.items()))


def parse_matching(text: str) -> dict:
    m = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'agent house'", lineno, 1)
        a, h = parts
        if a in m:
            raise ParseError(f"agent {a!r} matched twice", lineno, 1)
        m[a] = h
    return m
