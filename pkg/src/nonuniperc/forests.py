"""Free minimal, free weighted-maximal and wired weighted-maximal spanning forests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .families import DiestelLeader, Grandparent, OrientedTree
from .percolation import UnionFind
from .rng import stream, uniforms
from .truncation import FrontierError, Truncation, band_partition, wire


@dataclass
class LabeledGraph:
    """Finite multigraph with exact vertex weights and one uniform label per edge."""

    n: int
    edges: np.ndarray
    labels: np.ndarray
    weights: list[Fraction]
    frontier: np.ndarray
    level: np.ndarray | None = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_weight(self, e: int) -> Fraction:
        a, b = self.edges[e]
        return min(self.weights[a], self.weights[b])

    def restrict(self, mask: np.ndarray) -> tuple[LabeledGraph, np.ndarray]:
        """Subgraph on the edges selected by ``mask`` and the map back to edge ids."""
        ids = np.flatnonzero(mask)
        return LabeledGraph(self.n, self.edges[ids], self.labels[ids], self.weights,
                            self.frontier, self.level), ids


def label_truncation(t: Truncation, seed: int, replica: int = 0) -> LabeledGraph:
    return LabeledGraph(t.n, t.edges, uniforms(seed, "forest-labels", replica, t.m),
                        t.weights, t.frontier, t.ordered_level)


def kruskal(n: int, edges: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Keep each edge, in the given priority order, unless it closes a cycle."""
    uf = UnionFind(n)
    kept = np.zeros(len(edges), dtype=bool)
    for e in order:
        a, b = edges[e]
        if uf.union(int(a), int(b)):
            kept[e] = True
    return kept


def fmsf_order(g: LabeledGraph) -> list[int]:
    return sorted(range(g.m), key=lambda e: g.labels[e])


def fmaxsf_order(g: LabeledGraph) -> list[int]:
    """Best edge first: heavier edges, then smaller label among equal weights."""
    return sorted(range(g.m), key=lambda e: (-g.edge_weight(e), g.labels[e]))


@dataclass
class ForestConfig:
    kept: np.ndarray
    n: int
    edges: np.ndarray
    tree: np.ndarray = field(init=False)

    def __post_init__(self):
        uf = UnionFind(self.n)
        for a, b in self.edges[self.kept]:
            uf.union(int(a), int(b))
        roots = np.array([uf.find(v) for v in range(self.n)])
        _, self.tree = np.unique(roots, return_inverse=True)

    @property
    def tree_count(self) -> int:
        return int(self.tree.max()) + 1 if self.n else 0

    def is_acyclic(self) -> bool:
        return int(self.kept.sum()) == self.n - self.tree_count

    def tree_stats(self, g: LabeledGraph, level_threshold: float = 0.0) -> list[dict]:
        out = []
        for c in range(self.tree_count):
            vs = np.flatnonzero(self.tree == c)
            fr = vs[g.frontier[vs]]
            high = int(np.count_nonzero(g.level[fr] >= level_threshold)) \
                if g.level is not None else 0
            out.append({"tree": c, "vertices": len(vs),
                        "weight_sum": float(sum(g.weights[v] for v in vs)),
                        "boundary_touches": len(fr), "high_boundary_touches": high})
        return out


def fmsf(g: LabeledGraph) -> ForestConfig:
    return ForestConfig(kruskal(g.n, g.edges, fmsf_order(g)), g.n, g.edges)


def fmaxsf_w(g: LabeledGraph) -> ForestConfig:
    return ForestConfig(kruskal(g.n, g.edges, fmaxsf_order(g)), g.n, g.edges)


def wmaxsf_w(g: LabeledGraph) -> ForestConfig:
    """Weighted-maximal forest on the wired graph (all frontier vertices merged),
    pulled back to the original edges."""
    if not g.frontier.any():
        raise FrontierError("wired forest needs a frontier")
    wq = wire(None, g.edges, g.frontier)
    order = fmaxsf_order(g)
    q_order = [wq.edge_map[e] for e in order if wq.edge_map[e] >= 0]
    q_kept = kruskal(wq.n, wq.edges, q_order)
    kept = np.zeros(g.m, dtype=bool)
    kept[wq.source_edge[q_kept]] = True
    return ForestConfig(kept, g.n, g.edges)


# -- cycle-rule oracle -------------------------------------------------------------


def simple_cycles(n: int, edges: np.ndarray) -> list[np.ndarray]:
    """All cycles of a small multigraph as edge-index arrays (edge subsets that are
    connected with every degree equal to two)."""
    m = len(edges)
    if m > 20:
        raise ValueError("cycle enumeration is for small graphs only")
    if m == 0:
        return []
    masks = ((np.arange(1 << m)[:, None] >> np.arange(m)) & 1).astype(np.int64)
    inc = np.zeros((m, n), dtype=np.int64)
    inc[np.arange(m), edges[:, 0]] += 1
    inc[np.arange(m), edges[:, 1]] += 1
    deg = masks @ inc
    ok = np.all((deg == 0) | (deg == 2), axis=1) & (deg.sum(axis=1) > 0)
    out = []
    for s in np.flatnonzero(ok):
        es = np.flatnonzero(masks[s])
        uf = UnionFind(n)
        for e in es:
            uf.union(int(edges[e, 0]), int(edges[e, 1]))
        if len({uf.find(int(v)) for v in edges[es].ravel()}) == 1:
            out.append(es)
    return out


def cycle_rule(n: int, edges: np.ndarray, rank: Sequence[int]) -> np.ndarray:
    """Keep ``e`` unless some cycle through it has ``e`` as its worst edge
    (largest ``rank``)."""
    rank = np.asarray(rank)
    kept = np.ones(len(edges), dtype=bool)
    for cyc in simple_cycles(n, edges):
        kept[cyc[np.argmax(rank[cyc])]] = False
    return kept


def rank_of(order: Sequence[int]) -> np.ndarray:
    r = np.empty(len(order), dtype=np.int64)
    r[np.asarray(order, dtype=np.int64)] = np.arange(len(order))
    return r


# -- end proxies and hyperfinite trees -------------------------------------------------


def tree_end_proxy(fc: ForestConfig, g: LabeledGraph, L: float = math.inf) -> list[dict]:
    """Per tree: frontier vertices at ordered level >= -L, and all frontier vertices."""
    out = []
    lvl = g.level if g.level is not None else np.zeros(g.n)
    for c in range(fc.tree_count):
        vs = np.flatnonzero((fc.tree == c) & g.frontier)
        out.append({"tree": c, "nonvanishing": int(np.count_nonzero(lvl[vs] >= -L)),
                    "all": len(vs)})
    return out


@dataclass
class HyperfiniteTree:
    forest: ForestConfig
    stage_of_edge: np.ndarray  # -1 for edges never kept
    stage_components: list[np.ndarray]  # per stage, tree id of every vertex


def hyperfinite_spanning_tree(t: Truncation, widths: Sequence[int], seed: int,
                              offset: int | Sequence[int] = 0) -> HyperfiniteTree:
    """Nested band stages followed by a final stage with every edge.

    Stage ``r`` only uses edges inside a width-``widths[r]`` band and adds them
    in a uniformly random order, skipping edges that close a cycle.
    """
    fam = t.family
    if not (isinstance(fam, (Grandparent, DiestelLeader))
            or (isinstance(fam, OrientedTree) and fam.r == 1)):
        raise TypeError(f"{fam} is not one of the weighted-amenable families")
    if list(widths) != sorted(widths) or any(b % a for a, b in zip(widths, widths[1:])):
        raise ValueError("band widths must increase and divide each other (nested bands)")
    uf = UnionFind(t.n)
    stage = np.full(t.m, -1, dtype=np.int64)
    comps = []
    masks = [band_partition(t, h, offset) for h in widths] + [np.ones(t.m, dtype=bool)]
    for r, mask in enumerate(masks):
        ids = np.flatnonzero(mask)
        ids = ids[stream(seed, "hyperfinite", r).permutation(len(ids))]
        for e in ids:
            a, b = t.edges[e]
            if uf.union(int(a), int(b)):
                stage[e] = r
        roots = np.array([uf.find(v) for v in range(t.n)])
        comps.append(np.unique(roots, return_inverse=True)[1])
    return HyperfiniteTree(ForestConfig(stage >= 0, t.n, t.edges), stage, comps)
