"""Power multigraphs over levels, their level subgraphs, and level collapse.

``G^(k)`` keeps the base edges that change level and joins the two ends of
every path of length at most ``k`` that starts and ends on the same level, one
edge per path.  By default paths are simple (no repeated vertex); ``mode="walk"``
counts all walks instead.  A vertex is never joined to itself.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .families import Family
from .truncation import FrontierError, Subgraph, Truncation
from .weights import ONE, LogWeight

MODES = ("path", "walk")


def _check(k: int, mode: str) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def same_level_endpoints(family: Family, rec: Hashable, k: int, mode: str = "path") -> Counter:
    """Multiplicities of same-level endpoints of paths of length 1..k from ``rec``."""
    _check(k, mode)
    out: Counter = Counter()

    def dfs(v, w: LogWeight, depth: int, seen: tuple):
        for u, _, q in family.neighbors(v):
            if mode == "path" and u in seen:
                continue
            wu = w + LogWeight.from_ratio(q)
            if not wu and u != rec:
                out[u] += 1
            if depth + 1 < k:
                dfs(u, wu, depth + 1, seen + (u,))

    dfs(rec, ONE, 0, (rec,))
    return out


def brute_force_multiplicity(family: Family, x: Hashable, z: Hashable, k: int,
                             mode: str = "path") -> int:
    """Count paths from ``x`` to ``z`` of length 1..k by trying every sequence of
    neighbour choices."""
    _check(k, mode)
    if x == z:
        return 0
    d = family.degree
    total = 0
    for length in range(1, k + 1):
        for choice in itertools.product(range(d), repeat=length):
            v, trail, ok = x, [x], True
            for c in choice:
                v = family.neighbors(v)[c][0]
                if mode == "path" and v in trail:
                    ok = False
                    break
                trail.append(v)
            if ok and v == z:
                total += 1
    return total


@dataclass
class PowerGraph:
    t: Truncation
    k: int
    mode: str
    sources: np.ndarray  # vertices whose paths stay inside the ball
    within: dict[int, Counter]  # source -> same-level endpoint multiplicities

    def multiplicity(self, x: int, z: int) -> int:
        return self.within[x][z]

    def level_degree(self, x: int) -> int:
        return sum(self.within[x].values())

    def cross_degree(self, x: int) -> int:
        lv = self.t.levels
        return sum(1 for j, _, _ in self.t.rows[x] if not np.array_equal(lv[j], lv[x]))

    def degree(self, x: int) -> int:
        """Degree in ``G^(k)``: level-changing base edges plus same-level path edges."""
        return self.cross_degree(x) + self.level_degree(x)


def build_power_graph(t: Truncation, k: int, mode: str = "path") -> PowerGraph:
    _check(k, mode)
    fam = t.family
    sources = np.flatnonzero(t.dist + k <= t.radius)
    within = {}
    for x in sources.tolist():
        ends = same_level_endpoints(fam, t.records[x], k, mode)
        within[x] = Counter({t.index[z]: m for z, m in ends.items()})
    return PowerGraph(t, k, mode, sources, within)


@dataclass
class LevelGraph:
    """Restriction of a power graph to the root's level."""

    vertices: list[int]
    edges: Counter  # (x, z) with x < z -> multiplicity
    root_degree: int


def level_subgraph(pg: PowerGraph) -> LevelGraph:
    lv = pg.t.levels
    root_level = lv[0]
    vs = [x for x in pg.sources.tolist() if np.array_equal(lv[x], root_level)]
    vset = set(vs)
    edges: Counter = Counter()
    for x in vs:
        for z, m in pg.within[x].items():
            if z in vset and x < z:
                edges[(x, z)] += m
    return LevelGraph(vs, edges, pg.level_degree(0) if 0 in pg.within else 0)


# -- Cheeger witnesses on the level graph ------------------------------------------------


class LazyLevelGraph:
    """``L^(k)`` grown on demand from the family, one neighbourhood at a time."""

    def __init__(self, family: Family, k: int, mode: str = "path"):
        self.family, self.k, self.mode = family, k, mode
        self._nbrs: dict[Hashable, Counter] = {}

    def neighbours(self, rec) -> Counter:
        c = self._nbrs.get(rec)
        if c is None:
            c = self._nbrs[rec] = same_level_endpoints(self.family, rec, self.k, self.mode)
        return c

    def degree(self) -> int:
        return sum(self.neighbours(self.family.root()).values())


def greedy_edge_cheeger(g: LazyLevelGraph, budget: int) -> tuple[float, int]:
    """Greedy upper bound on the edge Cheeger ratio ``|boundary edges| / |F|``.

    Grows ``F`` from the root, each time adding the outside vertex with the most
    edges into ``F`` (ties by first discovery); returns the best ratio and its
    set size.
    """
    root = g.family.root()
    inF = {root}
    into: dict = {}
    order: dict = {}
    boundary = 0
    for z, m in g.neighbours(root).items():
        into[z] = m
        order.setdefault(z, len(order))
        boundary += m
    best = (boundary / 1, 1)
    while len(inF) < budget and into:
        v = max(into, key=lambda z: (into[z], -order[z]))
        inside = into.pop(v)
        inF.add(v)
        deg = sum(g.neighbours(v).values())
        boundary += deg - 2 * inside
        for z, m in g.neighbours(v).items():
            if z not in inF:
                into[z] = into.get(z, 0) + m
                order.setdefault(z, len(order))
        ratio = boundary / len(inF)
        if ratio < best[0]:
            best = (ratio, len(inF))
    return best


@dataclass
class TrendRow:
    k: int
    d_Gk: int
    d_Lk: int
    phi_hat: float
    ratio: float
    chain_cheeger: float
    chain_degree: float
    exceeds_inv_sqrt2: bool


def psn_ratio_trend(family: Family, ks: Sequence[int], budget: int = 200,
                    mode: str = "path", tol: float = 0.02) -> tuple[list[TrendRow], bool]:
    """Per-k level degree, witness ratio and bound-chain quantities, and whether the
    ratio is nondecreasing in k up to ``tol``."""
    rows = []
    root = family.root()
    cross = sum(1 for _, _, q in family.neighbors(root) if q != 1)
    for k in ks:
        g = LazyLevelGraph(family, k, mode)
        dL = g.degree()
        if dL == 0:
            continue
        phi, _ = greedy_edge_cheeger(g, budget)
        dG = cross + dL
        rows.append(TrendRow(k, dG, dL, phi, phi / dL, 1.0 / (phi + 1.0), math.sqrt(2) / dG,
                             phi / dL > 1 / math.sqrt(2)))
    ratios = [r.ratio for r in rows]
    ok = all(b >= a - tol for a, b in zip(ratios, ratios[1:]))
    return rows, ok


def trend_csv(family: Family, rows: Sequence[TrendRow]) -> str:
    lines = ["family,k,d_Gk,d_Lk,phi_hat,ratio,chain_cheeger,chain_degree"]
    for r in rows:
        lines.append(f"{family},{r.k},{r.d_Gk},{r.d_Lk},{r.phi_hat:.12g},{r.ratio:.12g},"
                     f"{r.chain_cheeger:.12g},{r.chain_degree:.12g}")
    return "\n".join(lines) + "\n"


# -- level collapse ---------------------------------------------------------------


@dataclass
class CollapsedSlice:
    base: Subgraph
    removed_level: tuple[int, ...]
    vertices: list[int]
    kept_edges: list[tuple[int, int]]
    added_edges: set[tuple[int, int]]

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in self.vertices}
        for a, b in itertools.chain(self.kept_edges, self.added_edges):
            adj[a].add(b)
            adj[b].add(a)
        return adj


def level_collapse(s: Subgraph, removed: Sequence[int] | int) -> CollapsedSlice:
    """Drop one level of a slice; join same-level survivors ``u, v`` that have
    neighbours ``u', v'`` in the dropped level with ``u' = v'`` or ``u' ~ v'``."""
    t = s.base
    lam = tuple(np.atleast_1d(removed).tolist())
    vs = s.vertices.tolist()
    lv = [tuple(row) for row in t.levels.tolist()]
    gone = [v for v in vs if lv[v] == lam]
    if any(t.frontier[v] for v in gone):
        raise FrontierError("the removed level touches the frontier")
    goneset = set(gone)
    keep = [v for v in vs if lv[v] != lam]
    nb = {v: set() for v in vs}
    for a, b in s.edges.tolist():
        nb[a].add(b)
        nb[b].add(a)
    kept_edges = [(a, b) for a, b in s.edges.tolist() if a not in goneset and b not in goneset]
    # survivors attached to each removed vertex
    hang = {g: [v for v in nb[g] if v not in goneset] for g in gone}
    added = set()
    for g in gone:
        near = list(hang[g])
        for g2 in nb[g] & goneset:
            near_pairs = itertools.product(hang[g], hang[g2])
            for u, v in near_pairs:
                if u != v and lv[u] == lv[v]:
                    added.add((min(u, v), max(u, v)))
        for u, v in itertools.combinations(near, 2):
            if lv[u] == lv[v]:
                added.add((min(u, v), max(u, v)))
    existing = {(min(a, b), max(a, b)) for a, b in kept_edges}
    return CollapsedSlice(s, lam, keep, kept_edges, added - existing)


def bfs_distances(adj: dict[int, set[int]], src: int) -> dict[int, int]:
    dist = {src: 0}
    q = deque([src])
    while q:
        v = q.popleft()
        for u in adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def collapse_distortion(cs: CollapsedSlice, pairs: Sequence[tuple[int, int]]) -> list[dict]:
    """Distances of survivor pairs before (slice) and after collapse."""
    slice_adj: dict[int, set[int]] = {v: set() for v in cs.base.vertices.tolist()}
    for a, b in cs.base.edges.tolist():
        slice_adj[a].add(b)
        slice_adj[b].add(a)
    cadj = cs.adjacency()
    out = []
    cache_s: dict = {}
    cache_c: dict = {}
    for u, v in pairs:
        ds = cache_s.setdefault(u, bfs_distances(slice_adj, u)).get(v, math.inf)
        dc = cache_c.setdefault(u, bfs_distances(cadj, u)).get(v, math.inf)
        out.append({"u": u, "v": v, "slice": ds, "collapsed": dc,
                    "ok": dc <= ds <= 2 * dc + 2})
    return out
