"""Bernoulli bond/site percolation with weight-aware cluster statistics.

Sampling uses common random numbers: replica ``i`` owns one uniform per edge
(or site), and an edge is open at density ``p`` iff its uniform is ``< p``.  A
replica therefore encodes the whole monotone family of configurations, and for
a monotone event we store a single number per replica: the bottleneck value
``tau`` above which the event holds.

Two backends produce those per-replica summaries:

* :class:`TruncationModel` works on an explicit ball and gets bottlenecks from
  the minimum spanning tree (minimax paths);
* :class:`TreeModel` explores oriented or regular trees lazily generation by
  generation, pruning edges above the largest density of interest, which
  makes radius-12 balls of 5-regular trees affordable.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order, connected_components, minimum_spanning_tree
from scipy.stats import norm

from .families import Family, OrientedTree, UnimodularTree
from .rng import stream, uniforms
from .truncation import Truncation, ball

Z95 = float(norm.ppf(0.975))


# -- configurations and clusters ---------------------------------------------------


@dataclass
class BondConfig:
    open: np.ndarray
    p: float
    seed: int
    replica: int


@dataclass
class SiteConfig:
    open: np.ndarray
    p: float
    seed: int
    replica: int


def sample_bond(t: Truncation, p: float, seed: int, replica: int = 0,
                purpose: str = "bond") -> BondConfig:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return BondConfig(uniforms(seed, purpose, replica, t.m) < p, p, seed, replica)


def sample_site(t: Truncation, p: float, seed: int, replica: int = 0,
                purpose: str = "site") -> SiteConfig:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return SiteConfig(uniforms(seed, purpose, replica, t.n) < p, p, seed, replica)


@dataclass(frozen=True)
class ClusterStats:
    """Mergeable cluster aggregates.

    The total weight is kept as ``exp(max_log) * scaled_sum`` so that clusters
    spanning many orders of magnitude never overflow.
    """

    size: int
    max_log: float
    scaled_sum: float
    max_level: float
    frontier_touches: int
    max_frontier_level: float

    @classmethod
    def vertex(cls, log_w: float, level: float, frontier: bool) -> ClusterStats:
        return cls(1, log_w, 1.0, level, int(frontier), level if frontier else -math.inf)

    def merge(self, other: ClusterStats) -> ClusterStats:
        m = max(self.max_log, other.max_log)
        s = (self.scaled_sum * math.exp(self.max_log - m)
             + other.scaled_sum * math.exp(other.max_log - m))
        return ClusterStats(
            self.size + other.size, m, s,
            max(self.max_level, other.max_level),
            self.frontier_touches + other.frontier_touches,
            max(self.max_frontier_level, other.max_frontier_level),
        )

    @property
    def log_weight_sum(self) -> float:
        return self.max_log + math.log(self.scaled_sum)

    @property
    def weight_sum(self) -> float:
        return math.exp(self.log_weight_sum)


class UnionFind:
    """Union-find with path halving, union by size and optional aggregates."""

    def __init__(self, n: int, stats: Sequence[ClusterStats] | None = None):
        self.parent = list(range(n))
        self.rank = [1] * n
        self.stats = list(stats) if stats is not None else None

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.rank[ra] += self.rank[rb]
        if self.stats is not None:
            self.stats[ra] = self.stats[ra].merge(self.stats[rb])
        return True


@dataclass
class ClusterForest:
    """Clusters of a configuration with per-cluster aggregates.

    ``label[v]`` is the cluster id of ``v`` (``-1`` for closed sites).  Cluster ids
    are numbered by smallest member, so the root's cluster is always id 0 when
    the root is open.
    """

    label: np.ndarray
    size: np.ndarray
    max_log: np.ndarray
    scaled_sum: np.ndarray
    max_level: np.ndarray
    frontier_touches: np.ndarray
    max_frontier_level: np.ndarray

    @property
    def count(self) -> int:
        return len(self.size)

    def root_cluster(self) -> int:
        return int(self.label[0])

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.label == c)

    def weight_sum(self, c: int) -> float:
        return float(math.exp(self.max_log[c]) * self.scaled_sum[c])

    def stats(self, c: int) -> ClusterStats:
        return ClusterStats(int(self.size[c]), float(self.max_log[c]), float(self.scaled_sum[c]),
                            float(self.max_level[c]), int(self.frontier_touches[c]),
                            float(self.max_frontier_level[c]))


def _relabel_by_min(labels: np.ndarray, active: np.ndarray) -> tuple[np.ndarray, int]:
    out = np.full(len(labels), -1, dtype=np.int64)
    idx = np.flatnonzero(active)
    _, first, inv = np.unique(labels[idx], return_index=True, return_inverse=True)
    order = np.argsort(idx[first], kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    out[idx] = rank[inv]
    return out, len(order)


def clusters(t: Truncation, cfg: BondConfig | SiteConfig) -> ClusterForest:
    if isinstance(cfg, BondConfig):
        if len(cfg.open) != t.m:
            raise ValueError("bond configuration does not match the truncation")
        active = np.ones(t.n, dtype=bool)
        e = t.edges[cfg.open]
    else:
        if len(cfg.open) != t.n:
            raise ValueError("site configuration does not match the truncation")
        active = cfg.open
        e = t.edges[active[t.edges[:, 0]] & active[t.edges[:, 1]]] if t.m else t.edges
    a = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(t.n, t.n))
    _, raw = connected_components(a, directed=False)
    label, k = _relabel_by_min(raw, active)
    return _aggregate(t, label, k)


def _aggregate(t: Truncation, label: np.ndarray, k: int) -> ClusterForest:
    on = label >= 0
    lab = label[on]
    lw = t.log_weights[on]
    lvl = t.ordered_level[on]
    fr = t.frontier[on]
    size = np.bincount(lab, minlength=k)
    max_log = np.full(k, -np.inf)
    np.maximum.at(max_log, lab, lw)
    scaled = np.bincount(lab, weights=np.exp(lw - max_log[lab]), minlength=k)
    max_level = np.full(k, -np.inf)
    np.maximum.at(max_level, lab, lvl)
    touches = np.bincount(lab, weights=fr.astype(float), minlength=k).astype(np.int64)
    max_fl = np.full(k, -np.inf)
    np.maximum.at(max_fl, lab[fr], lvl[fr])
    return ClusterForest(label, size, max_log, scaled, max_level, touches, max_fl)


# -- events on a single configuration ---------------------------------------------

LEVEL_EPS = 1e-9


def radial_reach(t: Truncation, cf: ClusterForest, r: int) -> bool:
    if r > t.radius:
        raise ValueError("reach radius exceeds the truncation radius")
    c = cf.root_cluster()
    return c >= 0 and bool(np.any(t.dist[cf.label == c] >= r))


def upward_reach(t: Truncation, cf: ClusterForest, level: float) -> bool:
    c = cf.root_cluster()
    if level <= 0:
        return c >= 0
    return c >= 0 and cf.max_level[c] >= level - LEVEL_EPS


def uniqueness_proxy(t: Truncation, cf: ClusterForest) -> int:
    """Clusters that meet the half-radius ball and touch the frontier."""
    inner = (t.dist <= t.radius // 2) & (cf.label >= 0)
    ids = np.unique(cf.label[inner])
    return int(np.count_nonzero(cf.frontier_touches[ids] > 0))


def root_weighted_degree(t: Truncation, cfg: BondConfig) -> Fraction:
    """Exact sum of neighbour ratios over the root's open edges."""
    return sum((t.edge_ratios[e] if t.edges[e, 0] == 0 else 1 / t.edge_ratios[e]
                for e in t.incidence[0] if cfg.open[e]), Fraction(0))


def expected_weighted_degree(t: Truncation, cfgs: Iterable[BondConfig]) -> tuple[float, float]:
    """Sample mean and standard error of the root's open weighted degree."""
    vals = np.array([float(root_weighted_degree(t, c)) for c in cfgs])
    if len(vals) < 2:
        return float(vals.mean()) if len(vals) else 0.0, math.inf
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


# -- per-replica traces -------------------------------------------------------------


@dataclass
class Trace:
    """Summary of one replica: monotone-event thresholds and growth data."""

    tau: dict[str, float]
    growth_dist: np.ndarray
    growth_b: np.ndarray


@dataclass(frozen=True)
class EventSpec:
    reach: int | None = None       # radial reach distance
    up_level: float | None = None  # upward reach level
    growth_cap: float = 0.0        # keep vertices with bottleneck below this for growth


def _summarize(dist: np.ndarray, level: np.ndarray, b: np.ndarray, spec: EventSpec,
               radius: int) -> Trace:
    tau = {}
    if spec.reach is not None:
        sel = b[dist >= spec.reach]
        tau["radial_reach"] = float(sel.min()) if len(sel) else math.inf
    if spec.up_level is not None:
        sel = b[level >= spec.up_level - LEVEL_EPS]
        tau["upward_reach"] = float(sel.min()) if len(sel) else math.inf
    keep = (b < spec.growth_cap) & (dist >= 1)
    return Trace(tau, dist[keep].astype(np.int16), b[keep])


def _tree_templates(family: Family) -> list[list[tuple[int, int]]]:
    """Forward steps ``(level increment, next state)`` per state; state 0 is the root."""
    if isinstance(family, OrientedTree):
        r, s = family.r, family.s
        up, dn = (1, 1), (-1, 2)
        return [[up] * r + [dn] * s, [up] * r + [dn] * (s - 1), [up] * (r - 1) + [dn] * s]
    if isinstance(family, UnimodularTree):
        d = family.d
        return [[(0, 1)] * d, [(0, 1)] * (d - 1)]
    raise TypeError(f"{family} is not a tree family")


def is_tree_family(family: Family) -> bool:
    return isinstance(family, (OrientedTree, UnimodularTree))


@dataclass
class TreeModel:
    """Lazy generation-by-generation exploration of a tree family."""

    family: Family
    radius: int
    mode: str
    seed: int
    spec: EventSpec
    p_cap: float
    purpose: str = "tree"

    def __post_init__(self):
        self._tmpl = _tree_templates(self.family)
        self._tmpl_arrays = [(np.array([a for a, _ in t], dtype=np.int64),
                              np.array([b for _, b in t], dtype=np.int64)) for t in self._tmpl]

    def explore(self, replica: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rng = stream(self.seed, f"{self.purpose}:{self.mode}", replica)
        b0 = rng.random() if self.mode == "site" else 0.0
        if b0 >= self.p_cap:
            return np.zeros(1, np.int64), np.zeros(1), np.array([b0])
        states = np.zeros(1, dtype=np.int64)
        levels = np.zeros(1, dtype=np.int64)
        bs = np.array([b0])
        out_d, out_l, out_b = [np.zeros(1, np.int64)], [levels], [bs]
        for depth in range(1, self.radius + 1):
            ns, nl, nb = [], [], []
            for code, (dl, nxt) in enumerate(self._tmpl_arrays):
                sel = states == code
                if not sel.any():
                    continue
                cnt = int(sel.sum())
                ns.append(np.tile(nxt, cnt))
                nl.append(np.repeat(levels[sel], len(dl)) + np.tile(dl, cnt))
                nb.append(np.repeat(bs[sel], len(dl)))
            states, levels, bs = np.concatenate(ns), np.concatenate(nl), np.concatenate(nb)
            u = rng.random(len(states))
            bs = np.maximum(bs, u)
            keep = u < self.p_cap
            states, levels, bs = states[keep], levels[keep], bs[keep]
            if not len(states):
                break
            out_d.append(np.full(len(states), depth, dtype=np.int64))
            out_l.append(levels)
            out_b.append(bs)
        return np.concatenate(out_d), np.concatenate(out_l).astype(float), np.concatenate(out_b)

    def trace(self, replica: int) -> Trace:
        d, lvl, b = self.explore(replica)
        return _summarize(d, lvl, b, self.spec, self.radius)


def bottlenecks(t: Truncation, u: np.ndarray, mode: str = "bond") -> np.ndarray:
    """Minimax value from the root to every vertex: the vertex joins the root's
    cluster exactly when ``p`` exceeds it."""
    if mode == "site":
        w = np.maximum(u[t.edges[:, 0]], u[t.edges[:, 1]])
        base = u[0]
    else:
        w = u
        base = 0.0
    n = t.n
    if t.m == 0:
        return np.full(n, base)
    a, b = t.edges[:, 0], t.edges[:, 1]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    order = np.lexsort((w, hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    first = np.ones(len(lo), dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    g = sparse.coo_matrix((w[first], (lo[first], hi[first])), shape=(n, n)).tocsr()
    mst = minimum_spanning_tree(g)
    sym = (mst + mst.T).tocsr()
    _, pred = breadth_first_order(sym, 0, directed=False, return_predecessors=True)
    anc = np.where(pred < 0, 0, pred)
    val = np.zeros(n)
    nz = np.flatnonzero(pred >= 0)
    val[nz] = np.asarray(sym[pred[nz], nz]).ravel()
    while np.any(anc != 0):
        val = np.maximum(val, val[anc])
        anc = anc[anc]
    return np.maximum(val, base)


@dataclass
class TruncationModel:
    """Coupled percolation on an explicit ball."""

    family: Family
    radius: int
    mode: str
    seed: int
    spec: EventSpec
    purpose: str = "ball"
    _t: Truncation | None = field(default=None, repr=False)

    @property
    def truncation(self) -> Truncation:
        if self._t is None:
            self._t = ball(self.family, self.radius)
        return self._t

    def __getstate__(self):
        d = dict(self.__dict__)
        d["_t"] = None
        return d

    def uniforms(self, replica: int) -> np.ndarray:
        t = self.truncation
        return uniforms(self.seed, f"{self.purpose}:{self.mode}", replica,
                        t.n if self.mode == "site" else t.m)

    def trace(self, replica: int) -> Trace:
        t = self.truncation
        b = bottlenecks(t, self.uniforms(replica), self.mode)
        return _summarize(t.dist, t.ordered_level, b, self.spec, self.radius)

    def uniqueness_counts(self, replica: int, grid: Sequence[float]) -> np.ndarray:
        t = self.truncation
        u = self.uniforms(replica)
        cls = BondConfig if self.mode == "bond" else SiteConfig
        return np.array([uniqueness_proxy(t, clusters(t, cls(u < p, p, self.seed, replica)))
                         for p in grid])


Model = TreeModel | TruncationModel


def _trace_chunk(args):
    model, lo, hi = args
    return [model.trace(i) for i in range(lo, hi)]


def _uniq_chunk(args):
    model, lo, hi, grid = args
    return [model.uniqueness_counts(i, grid) for i in range(lo, hi)]


def _chunks(lo: int, hi: int, workers: int) -> list[tuple[int, int]]:
    step = max(1, -(-(hi - lo) // max(1, workers)))
    return [(a, min(hi, a + step)) for a in range(lo, hi, step)]


def run_replicas(fn: Callable, model, lo: int, hi: int, workers: int = 1, extra=()) -> list:
    """Evaluate replicas ``lo..hi-1`` in order; the result never depends on ``workers``."""
    parts = [(model, a, b, *extra) for a, b in _chunks(lo, hi, workers)]
    if workers <= 1 or len(parts) <= 1:
        out = [fn(p) for p in parts]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(fn, parts))
    return [x for part in out for x in part]


def traces(model, lo: int, hi: int, workers: int = 1) -> list[Trace]:
    return run_replicas(_trace_chunk, model, lo, hi, workers)


# -- estimators ---------------------------------------------------------------------


def wilson(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


@dataclass
class SweepRow:
    estimator: str
    p: float
    replicas: int
    count: float
    value: float
    ci_lo: float
    ci_hi: float


def event_indicators(ts: Sequence[Trace], event: str, grid: Sequence[float]) -> np.ndarray:
    """Replica-by-grid indicator matrix of a monotone event."""
    tau = np.array([t.tau[event] for t in ts])
    return tau[:, None] < np.asarray(grid)[None, :]


def event_row(ts: Sequence[Trace], event: str, p: float) -> SweepRow:
    k = int(event_indicators(ts, event, [p]).sum())
    lo, hi = wilson(k, len(ts))
    return SweepRow(event, p, len(ts), k, k / len(ts) if ts else 0.0, lo, hi)


def growth_row(ts: Sequence[Trace], p: float, radius: int) -> SweepRow:
    """Sphere-growth ratio sum_{k>=2} N_k / sum_{k<R} N_k of the root cluster.

    On a tree whose non-root vertices have ``b`` forward edges this has
    expectation exactly ``b * p``, so it crosses one at the critical density.
    """
    x = np.zeros(len(ts))
    y = np.zeros(len(ts))
    for i, t in enumerate(ts):
        d = t.growth_dist[t.growth_b < p]
        x[i] = np.count_nonzero(d >= 2)
        y[i] = np.count_nonzero(d <= radius - 1)
    n = len(ts)
    if n == 0 or y.sum() == 0:
        return SweepRow("radial_growth", p, n, 0, 0.0, 0.0, math.inf)
    r = x.sum() / y.sum()
    se = math.sqrt(np.var(x - r * y, ddof=1) / n) / y.mean() if n > 1 else math.inf
    return SweepRow("radial_growth", p, n, float(x.sum()), float(r),
                    r - Z95 * se, r + Z95 * se)


def uniqueness_rows(counts: np.ndarray, grid: Sequence[float]) -> list[SweepRow]:
    rows = []
    for j, p in enumerate(grid):
        k = int(np.count_nonzero(counts[:, j] == 1))
        lo, hi = wilson(k, len(counts))
        rows.append(SweepRow("uniqueness", p, len(counts), k, k / len(counts), lo, hi))
    return rows


TARGETS = {"radial_reach": 0.5, "upward_reach": 0.5, "uniqueness": 0.5, "radial_growth": 1.0}


@dataclass
class Bracket:
    estimator: str
    lo: float
    hi: float
    open: bool
    rows: list[SweepRow]
    refinements: list[SweepRow] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi

    def below_or_overlaps(self, other: Bracket) -> bool:
        """Ordering up to overlap: ``self`` does not lie strictly above ``other``."""
        return self.lo <= other.hi


def crossing(rows: Sequence[SweepRow], target: float) -> tuple[float, float, bool]:
    """Bracket around the last upward crossing of ``target`` along the grid."""
    above = [r.value >= target for r in rows]
    if not any(above):
        return rows[-1].p, 1.0, True
    j = len(rows) - 1
    while j > 0 and above[j - 1]:
        j -= 1
    if not above[-1]:
        return rows[-1].p, 1.0, True
    if j == 0:
        return 0.0, rows[0].p, True
    return rows[j - 1].p, rows[j].p, False


@dataclass
class Estimator:
    """Evaluate one named estimator on fresh replica batches of a model."""

    name: str
    model: Model
    replicas: int
    workers: int = 1
    _batch: int = 0

    def _next_range(self) -> tuple[int, int]:
        lo = self._batch * self.replicas
        self._batch += 1
        return lo, lo + self.replicas

    def rows(self, grid: Sequence[float]) -> list[SweepRow]:
        lo, hi = self._next_range()
        if self.name == "uniqueness":
            counts = np.array(run_replicas(_uniq_chunk, self.model, lo, hi, self.workers,
                                           (list(grid),)))
            return uniqueness_rows(counts, grid)
        ts = traces(self.model, lo, hi, self.workers)
        if self.name == "radial_growth":
            return [growth_row(ts, p, self.model.radius) for p in grid]
        return [event_row(ts, self.name, p) for p in grid]


def sweep(est: Estimator, grid: Sequence[float]) -> list[SweepRow]:
    if list(grid) != sorted(grid):
        raise ValueError("p grid must be sorted")
    return est.rows(grid)


def threshold_estimate(est: Estimator, grid: Sequence[float], tol: float = 0.04,
                       max_steps: int = 8) -> Bracket:
    """Grid bracket of the target crossing, then bisection on fresh replicas."""
    target = TARGETS[est.name]
    rows = sweep(est, grid)
    lo, hi, is_open = crossing(rows, target)
    br = Bracket(est.name, lo, hi, is_open, rows)
    steps = 0
    while not is_open and br.width > tol and steps < max_steps:
        mid = round((br.lo + br.hi) / 2, 12)
        (row,) = est.rows([mid])
        br.refinements.append(row)
        if row.value >= target:
            br.hi = mid
        else:
            br.lo = mid
        steps += 1
    return br


def make_model(family: Family, radius: int, mode: str, seed: int, spec: EventSpec,
               p_cap: float = 1.0, lazy: bool | None = None) -> Model:
    if lazy is None:
        lazy = is_tree_family(family)
    if lazy:
        return TreeModel(family, radius, mode, seed, spec, p_cap)
    return TruncationModel(family, radius, mode, seed, spec)


# -- phase report -------------------------------------------------------------------


@dataclass
class PhaseReport:
    family: str
    radius: int
    c: Bracket
    h: Bracket
    u: Bracket
    h_is_c: bool
    under_resolved: bool

    @property
    def ordered(self) -> bool:
        return self.c.below_or_overlaps(self.h) and self.h.below_or_overlaps(self.u)

    @property
    def c_h_overlap(self) -> bool:
        return self.c.lo <= self.h.hi and self.h.lo <= self.c.hi


def phase_brackets(family: Family, radius: int, seed: int, replicas: int,
                   grid: Sequence[float], u_radius: int | None = None,
                   u_replicas: int | None = None, tol: float = 0.04,
                   workers: int = 1) -> PhaseReport:
    """Brackets for the p_c, heaviness and uniqueness proxies.

    For unimodular families every infinite cluster is heavy, and weight levels
    are flat, so the heaviness proxy is the critical-density estimator itself.
    """
    p_cap = max(grid)
    L = radius // 2
    unimod = family.unimodular
    spec = EventSpec(reach=radius, up_level=None if unimod else L, growth_cap=p_cap)
    c_model = make_model(family, radius, "bond", seed, spec, p_cap)
    c = threshold_estimate(Estimator("radial_growth", c_model, replicas, workers), grid, tol)
    if unimod:
        h = c
    else:
        h = threshold_estimate(Estimator("upward_reach", c_model, replicas, workers), grid, tol)
    ur = u_radius if u_radius is not None else max(1, min(radius, 6))
    u_model = TruncationModel(family, ur, "bond", seed, EventSpec())
    u = threshold_estimate(Estimator("uniqueness", u_model, u_replicas or replicas, workers),
                           grid, tol)
    return PhaseReport(str(family), radius, c, h, u, unimod, radius < 4)


def site_threshold_check(family: Family, radius: int, p: float, phi_hat: float,
                         seed: int, replicas: int) -> dict:
    """Report the site-density bound d/(phi+d) beside the observed upward reach."""
    d = family.degree
    bound = d / (phi_hat + d)
    L = radius // 2
    spec = EventSpec(reach=radius, up_level=L if not family.unimodular else None)
    model = make_model(family, radius, "site", seed, spec, p_cap=p)
    ts = traces(model, 0, replicas)
    event = "radial_reach" if family.unimodular else "upward_reach"
    row = event_row(ts, event, p)
    return {"family": str(family), "p": p, "phi_hat": phi_hat, "bound": bound,
            "event": event, "freq": row.value, "ci": (row.ci_lo, row.ci_hi)}
