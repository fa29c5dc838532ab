"""Finite balls of a lazy family, level bands, slices and the wired quotient."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .families import Family, Record
from .weights import ONE, LogWeight

DEFAULT_VERTEX_BUDGET = 2_000_000


class BudgetExceeded(RuntimeError):
    """A construction would exceed its configured resource cap."""


class FrontierError(ValueError):
    """An operation needs vertices whose neighbourhood lies inside the ball."""


@dataclass
class Truncation:
    family: Family
    radius: int
    records: list[Record]
    dist: np.ndarray
    logw: list[LogWeight]
    rows: list[list[tuple[int, str, Fraction]]]
    edges: np.ndarray
    edge_labels: list[str]
    edge_ratios: list[Fraction]
    index: dict[Record, int] = field(repr=False)

    # -- basic shape ------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degree(self) -> int:
        return self.family.degree

    @cached_property
    def frontier(self) -> np.ndarray:
        return self.dist == self.radius

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.frontier)

    @cached_property
    def primes(self) -> tuple[int, ...]:
        return self.family.primes

    @cached_property
    def levels(self) -> np.ndarray:
        """Integer level vectors, one row per vertex (zero columns if unimodular)."""
        ps = self.primes
        out = np.zeros((self.n, len(ps)), dtype=np.int64)
        for i, w in enumerate(self.logw):
            if w:
                out[i] = w.level(ps)
        return out

    @cached_property
    def log_weights(self) -> np.ndarray:
        return np.array([w.log() for w in self.logw])

    @cached_property
    def ordered_level(self) -> np.ndarray:
        """log w measured in units of the family's smallest ratio above one."""
        unit = self.family.step_unit()
        if unit is None:
            return np.zeros(self.n)
        return self.log_weights / math.log(unit)

    @cached_property
    def weights(self) -> list[Fraction]:
        return [w.value() for w in self.logw]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric adjacency with multiplicities."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.m, dtype=np.int64)
        a = sparse.coo_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(self.n, self.n))
        return a.tocsr()

    @cached_property
    def incidence(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for e, (a, b) in enumerate(self.edges.tolist()):
            inc[a].append(e)
            inc[b].append(e)
        return inc

    def neighbors(self, i: int) -> list[int]:
        """Local neighbours of ``i`` inside the ball, with multiplicity, in family order."""
        return [j for j, _, _ in self.rows[i] if j >= 0]

    def require_interior(self, vs: Iterable[int]) -> None:
        bad = [v for v in vs if self.frontier[v]]
        if bad:
            raise FrontierError(f"vertices {bad[:5]} lie on the frontier")

    def level_index(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.levels[i])

    def address(self, i: int) -> str:
        return self.family.address(self.records[i])

    # -- serialization ----------------------------------------------------------
    def dump(self) -> str:
        """Plain-text dump.

        Header ``# family radius n m``, then ``V index address dist frontier level``
        rows, then ``E index u v label ratio`` rows.
        """
        buf = io.StringIO()
        buf.write(f"# {self.family} {self.radius} {self.n} {self.m}\n")
        for i in range(self.n):
            lvl = ",".join(map(str, self.levels[i])) or "-"
            buf.write(f"V {i} {self.address(i)} {self.dist[i]} {int(self.frontier[i])} {lvl}\n")
        for e, (a, b) in enumerate(self.edges.tolist()):
            buf.write(f"E {e} {a} {b} {self.edge_labels[e]} {self.edge_ratios[e]}\n")
        return buf.getvalue()


def ball(family: Family, radius: int, max_vertices: int = DEFAULT_VERTEX_BUDGET) -> Truncation:
    """BFS ball of ``radius`` around the root, in deterministic BFS order."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    root = family.root()
    records = [root]
    index = {root: 0}
    dist = [0]
    logw = [ONE]
    nbr_cache: list[list] = []
    head = 0
    while head < len(records):
        rec = records[head]
        nb = family.neighbors(rec)
        nbr_cache.append(nb)
        if dist[head] < radius:
            for u, _, q in nb:
                if u not in index:
                    if len(records) >= max_vertices:
                        raise BudgetExceeded(
                            f"ball({family}, {radius}) exceeds {max_vertices} vertices")
                    index[u] = len(records)
                    records.append(u)
                    dist.append(dist[head] + 1)
                    logw.append(logw[head] + LogWeight.from_ratio(q))
        head += 1

    rows = []
    edges, labels, ratios = [], [], []
    for i, nb in enumerate(nbr_cache):
        row = []
        for u, lab, q in nb:
            j = index.get(u, -1)
            row.append((j, lab, q))
            if j > i:
                edges.append((i, j))
                labels.append(lab)
                ratios.append(q)
        rows.append(row)
    return Truncation(
        family=family,
        radius=radius,
        records=records,
        dist=np.asarray(dist, dtype=np.int64),
        logw=logw,
        rows=rows,
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        edge_labels=labels,
        edge_ratios=ratios,
        index=index,
    )


# -- cocycle audit -------------------------------------------------------------------


def sample_closed_walks(t: Truncation, count: int, rng: np.random.Generator,
                        max_len: int = 12) -> list[list[int]]:
    """Closed walks of length at most ``max_len`` inside the ball.

    Each is a random walk of up to ``max_len // 2`` steps followed by a short
    path back to its start.
    """
    half = max_len // 2
    starts = np.flatnonzero(t.dist + half <= t.radius)
    if not len(starts):
        raise FrontierError("ball too small for closed walks of this length")
    out = []
    for _ in range(count):
        v0 = int(rng.choice(starts))
        path = [v0]
        for _ in range(int(rng.integers(1, half + 1))):
            nb = t.neighbors(path[-1])
            path.append(nb[int(rng.integers(len(nb)))])
        out.append(path + shortest_path(t, path[-1], v0)[1:])
    return out


def shortest_path(t: Truncation, a: int, b: int) -> list[int]:
    """A shortest path from ``a`` to ``b`` by bidirectional BFS."""
    if a == b:
        return [a]
    pa, pb = {a: None}, {b: None}
    da, db = {a: 0}, {b: 0}
    fa, fb = [a], [b]
    while fa and fb:
        grow_a = len(fa) <= len(fb)
        front, par, dep, other = (fa, pa, da, db) if grow_a else (fb, pb, db, da)
        nxt = []
        for v in front:
            for u in t.neighbors(v):
                if u not in par:
                    par[u], dep[u] = v, dep[v] + 1
                    nxt.append(u)
        meets = [u for u in nxt if u in other]
        if meets:
            mid = min(meets, key=lambda u: da[u] + db[u])
            left, v = [], mid
            while v is not None:
                left.append(v)
                v = pa[v]
            right, v = [], pb[mid]
            while v is not None:
                right.append(v)
                v = pb[v]
            return left[::-1] + right
        if grow_a:
            fa = nxt
        else:
            fb = nxt
    raise ValueError(f"no path between {a} and {b}")


def cocycle_sum(t: Truncation, walk: Sequence[int]) -> LogWeight:
    """Product of the declared edge ratios along ``walk``, as an exponent vector."""
    total = ONE
    for a, b in zip(walk, walk[1:]):
        q = next(q for j, _, q in t.rows[a] if j == b)
        total = total + LogWeight.from_ratio(q)
    return total


# -- levels and slices -------------------------------------------------------------


def band_ids(t: Truncation, h: int, offset: int | Sequence[int] = 0) -> np.ndarray:
    """Per-vertex band vectors ``floor((level - offset) / h)`` taken coordinatewise."""
    if h < 1:
        raise ValueError("band width must be >= 1")
    off = np.broadcast_to(np.asarray(offset, dtype=np.int64), (t.levels.shape[1],))
    return np.floor_divide(t.levels - off, h)


def band_partition(t: Truncation, h: int | float, offset: int | Sequence[int] = 0) -> np.ndarray:
    """Boolean mask of edges whose endpoints fall in the same band.

    ``h = math.inf`` keeps every edge.
    """
    if h == math.inf:
        return np.ones(t.m, dtype=bool)
    b = band_ids(t, int(h), offset)
    u, v = t.edges[:, 0], t.edges[:, 1]
    return np.all(b[u] == b[v], axis=1)


@dataclass
class Subgraph:
    """Vertex subset of a truncation with the edges it induces (local indices kept)."""

    base: Truncation
    vertices: np.ndarray
    edge_ids: np.ndarray

    @property
    def edges(self) -> np.ndarray:
        return self.base.edges[self.edge_ids]

    def component_of(self, v: int) -> set[int]:
        from scipy.sparse.csgraph import connected_components

        keep = np.zeros(self.base.n, dtype=bool)
        keep[self.vertices] = True
        if not keep[v]:
            return set()
        e = self.edges
        a = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])),
                              shape=(self.base.n, self.base.n))
        _, lab = connected_components(a, directed=False)
        return {int(x) for x in np.flatnonzero((lab == lab[v]) & keep)}


def induce_slice(t: Truncation, band: Iterable[Sequence[int] | int]) -> Subgraph:
    """Keep vertices whose level vector lies in ``band`` and the edges among them."""
    wanted = {tuple(np.atleast_1d(b).tolist()) for b in band}
    keep = np.array([tuple(row) in wanted for row in t.levels.tolist()], dtype=bool) \
        if t.n else np.zeros(0, dtype=bool)
    e = t.edges
    ekeep = keep[e[:, 0]] & keep[e[:, 1]] if t.m else np.zeros(0, dtype=bool)
    return Subgraph(t, np.flatnonzero(keep), np.flatnonzero(ekeep))


# -- wired quotient --------------------------------------------------------------


@dataclass
class WiredQuotient:
    base: Truncation
    n: int
    sink: int
    vertex_map: np.ndarray
    edges: np.ndarray
    edge_map: np.ndarray  # base edge index -> quotient edge index, -1 if dropped
    source_edge: np.ndarray  # quotient edge index -> base edge index


def wired_quotient(t: Truncation) -> WiredQuotient:
    return wire(t, t.edges, t.frontier)


def wire(base, edges: np.ndarray, frontier: np.ndarray) -> WiredQuotient:
    """Merge all ``frontier`` vertices into one sink; drop self-loops, keep parallels."""
    if not frontier.any():
        raise FrontierError("wired quotient needs at least one frontier vertex")
    n_int = int((~frontier).sum())
    vmap = np.empty(len(frontier), dtype=np.int64)
    vmap[~frontier] = np.arange(n_int)
    vmap[frontier] = n_int
    q = vmap[edges] if len(edges) else np.zeros((0, 2), dtype=np.int64)
    alive = q[:, 0] != q[:, 1]
    emap = np.full(len(edges), -1, dtype=np.int64)
    emap[alive] = np.arange(int(alive.sum()))
    return WiredQuotient(base, n_int + 1, n_int, vmap, q[alive], emap, np.flatnonzero(alive))
