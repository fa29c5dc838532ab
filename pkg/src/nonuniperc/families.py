"""Lazy generators for the transitive graph families.

Every family works on hashable *records* (structural vertex addresses) and
exposes ``neighbors(record)`` returning ``(record, label, ratio)`` triples, where
``ratio`` is the exact weight of the neighbour relative to the vertex.  The
:class:`Graph` wrapper interns records into integer handles.

Vertex addressing:

* tree families use reduced edge-words from the root.  A letter ``2*i`` is an
  up-step and ``2*i + 1`` a down-step; indices enumerate the non-backtracking
  choices, so every word is already reduced and the encoding is injective;
* ``DiestelLeader`` uses a pair of words in ``T(1,k)`` and ``T(1,l)``;
* ``FreeProduct`` uses an alternating tuple of ``(side, factor record)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterator, Union

from .weights import ONE, LogWeight, factorize

Record = Hashable
Neighbor = tuple[Record, str, Fraction]


class InvalidVertex(KeyError):
    pass


def _tree_step(word: tuple, r: int, s: int) -> tuple[list[tuple], list[tuple]]:
    """Up- and down-neighbours of ``word`` in the oriented tree T(r,s)."""
    if not word:
        return [(2 * a,) for a in range(r)], [(2 * b + 1,) for b in range(s)]
    back = word[:-1]
    if word[-1] & 1:
        ups = [back] + [word + (2 * a,) for a in range(r - 1)]
        downs = [word + (2 * b + 1,) for b in range(s)]
    else:
        ups = [word + (2 * a,) for a in range(r)]
        downs = [back] + [word + (2 * b + 1,) for b in range(s - 1)]
    return ups, downs


def _tree_type(word: tuple) -> tuple[int, ...]:
    return tuple(c & 1 for c in word)


class Family:
    """Base class: subclasses define the structure, this class derives censuses."""

    name: str = ""

    # -- structure (overridden) -------------------------------------------------
    @property
    def degree(self) -> int:
        raise NotImplementedError

    def root(self) -> Record:
        return ()

    def neighbors(self, rec: Record) -> list[Neighbor]:
        raise NotImplementedError

    def orbit_key(self, rec: Record) -> Hashable:
        """Orbit of ``rec`` under the automorphisms fixing the root."""
        raise NotImplementedError

    def reverse_label(self, label: str) -> str:
        return label

    def tree_distance(self, rec: Record) -> int:
        """Graph distance to the root; only tree families know it without a BFS."""
        raise NotImplementedError(f"{self} has no closed-form distance")

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def address(self, rec: Record) -> str:
        return "".join(("u" if c % 2 == 0 else "d") + str(c // 2) for c in rec) or "o"

    # -- derived ---------------------------------------------------------------
    @property
    def primes(self) -> tuple[int, ...]:
        ps: set[int] = set()
        for _, _, q in self.neighbors(self.root()):
            ps.update(p for p, _ in factorize(q.numerator))
            ps.update(p for p, _ in factorize(q.denominator))
        return tuple(sorted(ps))

    @property
    def unimodular(self) -> bool:
        return all(q == 1 for _, _, q in self.neighbors(self.root()))

    def census(self) -> dict[Fraction, int]:
        return dict(Counter(q for _, _, q in self.neighbors(self.root())))

    def step_unit(self) -> Fraction | None:
        """Smallest neighbour ratio above one; ``None`` for unimodular families."""
        above = [q for q in self.census() if q > 1]
        return min(above) if above else None

    def sqrt_degree(self) -> float:
        return math.fsum(math.sqrt(q) for _, _, q in self.neighbors(self.root()))

    def __str__(self) -> str:
        inner = ",".join(str(v) for v in self.params().values() if not isinstance(v, dict))
        return f"{self.name}({inner})"


@dataclass(frozen=True, eq=True)
class OrientedTree(Family):
    r: int
    s: int
    name = "T"

    def __post_init__(self):
        if not 1 <= self.r < self.s:
            raise ValueError("OrientedTree needs 1 <= r < s")

    @property
    def degree(self) -> int:
        return self.r + self.s

    def neighbors(self, rec):
        ups, downs = _tree_step(rec, self.r, self.s)
        up, down = Fraction(self.s, self.r), Fraction(self.r, self.s)
        return [(u, "up", up) for u in ups] + [(v, "down", down) for v in downs]

    def orbit_key(self, rec):
        return _tree_type(rec)

    def reverse_label(self, label):
        return {"up": "down", "down": "up"}[label]

    def tree_distance(self, rec):
        return len(rec)

    def params(self):
        return {"r": self.r, "s": self.s}


def _t1k_parent(word: tuple) -> tuple:
    if word and word[-1] & 1:
        return word[:-1]
    return word + (0,)


def _t1k_children(word: tuple, k: int) -> list[tuple]:
    if word and not word[-1] & 1:
        # reached by an up-step: the previous vertex is one of the children
        return [word[:-1]] + [word + (2 * b + 1,) for b in range(k - 1)]
    return [word + (2 * b + 1,) for b in range(k)]


def _t1k_level(word: tuple) -> int:
    """Number of down-steps minus up-steps."""
    return sum(1 if c & 1 else -1 for c in word)


def _t1k_key(word: tuple) -> tuple[int, int]:
    # reduced paths in T(1,k) are u^a d^b
    a = sum(1 for c in word if not c & 1)
    return a, len(word) - a


@dataclass(frozen=True, eq=True)
class Grandparent(Family):
    k: int
    name = "GP"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("Grandparent needs k >= 2")

    @property
    def degree(self) -> int:
        return 2 + self.k + self.k**2

    def neighbors(self, rec):
        k = self.k
        p = _t1k_parent(rec)
        out = [(p, "parent", Fraction(k)), (_t1k_parent(p), "grandparent", Fraction(k * k))]
        kids = _t1k_children(rec, k)
        out += [(c, "child", Fraction(1, k)) for c in kids]
        out += [(g, "grandchild", Fraction(1, k * k)) for c in kids for g in _t1k_children(c, k)]
        return out

    def orbit_key(self, rec):
        return _t1k_key(rec)

    def reverse_label(self, label):
        return {"parent": "child", "child": "parent",
                "grandparent": "grandchild", "grandchild": "grandparent"}[label]

    def params(self):
        return {"k": self.k}


@dataclass(frozen=True, eq=True)
class DiestelLeader(Family):
    """Horocyclic product of T(1,k) and T(1,l); vertices are (x, y) word pairs."""

    k: int
    l: int
    name = "DL"

    def __post_init__(self):
        if self.k < 2 or self.l < 2:
            raise ValueError("DiestelLeader needs k, l >= 2")

    @property
    def degree(self) -> int:
        return self.k + self.l

    def root(self):
        return ((), ())

    def neighbors(self, rec):
        x, y = rec
        k, l = self.k, self.l
        py = _t1k_parent(y)
        out = [((c, py), "x-child", Fraction(l, k)) for c in _t1k_children(x, k)]
        px = _t1k_parent(x)
        out += [((px, c), "x-parent", Fraction(k, l)) for c in _t1k_children(y, l)]
        return out

    def orbit_key(self, rec):
        return _t1k_key(rec[0]), _t1k_key(rec[1])

    def reverse_label(self, label):
        return {"x-child": "x-parent", "x-parent": "x-child"}[label]

    def level_of(self, rec) -> int:
        return _t1k_level(rec[0])

    def params(self):
        return {"k": self.k, "l": self.l}

    def address(self, rec):
        x, y = rec
        return f"{Family.address(self, x)}|{Family.address(self, y)}"


@dataclass(frozen=True, eq=True)
class UnimodularTree(Family):
    d: int
    name = "Td"

    def __post_init__(self):
        if self.d < 3:
            raise ValueError("UnimodularTree needs d >= 3")

    @property
    def degree(self) -> int:
        return self.d

    def neighbors(self, rec):
        one = Fraction(1)
        if not rec:
            return [((i,), "edge", one) for i in range(self.d)]
        return [(rec[:-1], "edge", one)] + [(rec + (i,), "edge", one) for i in range(self.d - 1)]

    def orbit_key(self, rec):
        return len(rec)

    def tree_distance(self, rec):
        return len(rec)

    def params(self):
        return {"d": self.d}

    def address(self, rec):
        return ".".join(map(str, rec)) or "o"


@dataclass(frozen=True, eq=True)
class CartesianGPTree(Family):
    k: int
    d: int
    name = "GPxT"

    def __post_init__(self):
        object.__setattr__(self, "_gp", Grandparent(self.k))
        object.__setattr__(self, "_tree", UnimodularTree(self.d))

    @property
    def degree(self) -> int:
        return self._gp.degree + self.d

    def root(self):
        return ((), ())

    def neighbors(self, rec):
        g, t = rec
        out = [((h, t), lab, q) for h, lab, q in self._gp.neighbors(g)]
        out += [((g, u), "tree", q) for u, _, q in self._tree.neighbors(t)]
        return out

    def orbit_key(self, rec):
        return _t1k_key(rec[0]), len(rec[1])

    def reverse_label(self, label):
        return "tree" if label == "tree" else self._gp.reverse_label(label)

    def params(self):
        return {"k": self.k, "d": self.d}

    def address(self, rec):
        return f"{Family.address(self, rec[0])}|{self._tree.address(rec[1])}"


@dataclass(frozen=True, eq=True)
class FreeProduct(Family):
    left: Family
    right: Family
    name = "Free"

    @property
    def degree(self) -> int:
        return self.left.degree + self.right.degree

    def _factors(self):
        return (self.left, self.right)

    def neighbors(self, rec):
        out = []
        for side, fac in enumerate(self._factors()):
            tag = "LR"[side]
            froot = fac.root()
            if rec and rec[-1][0] == side:
                base, pos = rec[:-1], rec[-1][1]
            else:
                base, pos = rec, froot
            for u, lab, q in fac.neighbors(pos):
                new = base if u == froot else base + ((side, u),)
                out.append((new, f"{tag}.{lab}", q))
        return out

    def orbit_key(self, rec):
        facs = self._factors()
        return tuple((side, facs[side].orbit_key(sub)) for side, sub in rec)

    def reverse_label(self, label):
        tag, lab = label.split(".", 1)
        return f"{tag}.{self._factors()['LR'.index(tag)].reverse_label(lab)}"

    def params(self):
        def desc(f):
            return {"family": FAMILY_KEYS[type(f)], **f.params()}
        return {"left": desc(self.left), "right": desc(self.right)}

    def address(self, rec):
        facs = self._factors()
        return "/".join(f"{'LR'[s]}:{facs[s].address(sub)}" for s, sub in rec) or "o"

    def __str__(self):
        return f"({self.left})*({self.right})"


FAMILY_KEYS: dict[type, str] = {
    OrientedTree: "tree",
    Grandparent: "gp",
    DiestelLeader: "dl",
    CartesianGPTree: "gpxt",
    FreeProduct: "free",
    UnimodularTree: "regular",
}

GraphFamily = Union[OrientedTree, Grandparent, DiestelLeader, CartesianGPTree, FreeProduct,
                    UnimodularTree]


def family_from_dict(desc: dict[str, Any]) -> Family:
    """Build a family from ``{"family": "gp", "k": 2}``-style descriptors."""
    desc = dict(desc)
    kind = desc.pop("family", None)
    params = desc.pop("params", {})
    params = {**params, **desc}
    try:
        if kind == "tree":
            return OrientedTree(int(params["r"]), int(params["s"]))
        if kind == "gp":
            return Grandparent(int(params["k"]))
        if kind == "dl":
            return DiestelLeader(int(params["k"]), int(params["l"]))
        if kind == "gpxt":
            return CartesianGPTree(int(params["k"]), int(params["d"]))
        if kind == "regular":
            return UnimodularTree(int(params["d"]))
        if kind == "free":
            return FreeProduct(family_from_dict(params["left"]), family_from_dict(params["right"]))
    except KeyError as exc:
        raise ValueError(f"family {kind!r} missing parameter {exc}") from None
    raise ValueError(f"unknown family {kind!r}; expected one of {sorted(FAMILY_KEYS.values())}")


def family_to_dict(fam: Family) -> dict[str, Any]:
    return {"family": FAMILY_KEYS[type(fam)], **fam.params()}


class Graph:
    """A family with interned vertex handles.

    Interning is single-writer; handles are dense integers and the root is 0.
    """

    def __init__(self, family: Family):
        self.family = family
        self._records: list[Record] = []
        self._index: dict[Record, int] = {}
        self._logw: dict[int, LogWeight] = {}
        self.root = self.intern(family.root())
        self._logw[self.root] = ONE

    @property
    def degree(self) -> int:
        return self.family.degree

    def intern(self, rec: Record) -> int:
        h = self._index.get(rec)
        if h is None:
            h = len(self._records)
            self._records.append(rec)
            self._index[rec] = h
        return h

    def record(self, h: int) -> Record:
        if not isinstance(h, int) or not 0 <= h < len(self._records):
            raise InvalidVertex(h)
        return self._records[h]

    def handle(self, rec: Record) -> int:
        return self._index[rec]

    def neighbors(self, h: int) -> list[tuple[int, str, Fraction]]:
        rec = self.record(h)
        out = []
        w = self._logw.get(h)
        for u, lab, q in self.family.neighbors(rec):
            hu = self.intern(u)
            if w is not None and hu not in self._logw:
                self._logw[hu] = w + LogWeight.from_ratio(q)
            out.append((hu, lab, q))
        return out

    def log_weight(self, h: int) -> LogWeight:
        self.record(h)
        if h not in self._logw:
            self._logw[h] = self._weight_by_search(h)
        return self._logw[h]

    def _weight_by_search(self, h: int) -> LogWeight:
        # BFS outward from the root until the handle's record is met
        target = self.record(h)
        fam = self.family
        seen = {fam.root(): ONE}
        frontier = [fam.root()]
        while frontier:
            nxt = []
            for rec in frontier:
                for u, _, q in fam.neighbors(rec):
                    if u not in seen:
                        seen[u] = seen[rec] + LogWeight.from_ratio(q)
                        if u == target:
                            return seen[u]
                        nxt.append(u)
            frontier = nxt
            if len(seen) > 5_000_000:
                break
        raise InvalidVertex(h)

    def neighbor_census(self, h: int) -> dict[Fraction, int]:
        return dict(Counter(q for _, _, q in self.neighbors(h)))

    def weighted_degree(self, h: int) -> Fraction:
        return sum((q for _, _, q in self.neighbors(h)), Fraction(0))

    def sqrt_degree(self) -> float:
        return self.family.sqrt_degree()

    def address(self, h: int) -> str:
        return self.family.address(self.record(h))

    def __len__(self) -> int:
        return len(self._records)


def census_identity_holds(census: dict[Fraction, int]) -> bool:
    """delta * N_delta == N_(1/delta) for every ratio present."""
    return all(q * n == census.get(1 / q, 0) for q, n in census.items())


def iter_word_paths(family: Family, length: int) -> Iterator[list[Neighbor]]:
    """All walks of exactly ``length`` steps from the root (small lengths only)."""
    def rec(pos, path):
        if len(path) == length:
            yield list(path)
            return
        for step in family.neighbors(pos):
            path.append(step)
            yield from rec(step[0], path)
            path.pop()
    yield from rec(family.root(), [])
