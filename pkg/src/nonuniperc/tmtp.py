"""Exact audits of the tilted mass transport identity.

A transport kernel sends rational mass ``f(x, z)`` from ``x`` to vertices ``z``
near ``x``.  For kernels that only look at edge labels and weight ratios,
``sum_z f(x, z) == sum_z f(z, y) * w^y(z)`` for every pair ``x, y``; the audit
checks this with exact rationals.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Sequence

import numpy as np

from .families import Family
from .truncation import FrontierError, Truncation

MassMap = dict[Hashable, Fraction]
# rule(family, record, local index or None) -> masses keyed by target record
Rule = Callable[[Family, Hashable, "int | None"], MassMap]


@dataclass(frozen=True)
class TransportKernel:
    name: str
    radius: int
    rule: Rule
    invariant: bool = True


@dataclass
class AuditResult:
    kernel: str
    x: int
    y: int
    out_sum: Fraction
    in_sum: Fraction

    @property
    def equal(self) -> bool:
        return self.out_sum == self.in_sum

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "x": self.x, "y": self.y,
                "out": str(self.out_sum), "in": str(self.in_sum), "equal": self.equal}


def local_ball(family: Family, rec: Hashable, radius: int) -> dict[Hashable, tuple[int, Fraction]]:
    """Vertices within ``radius`` of ``rec`` with distance and weight relative to ``rec``."""
    out = {rec: (0, Fraction(1))}
    q = deque([rec])
    while q:
        v = q.popleft()
        dv, wv = out[v]
        if dv == radius:
            continue
        for u, _, r in family.neighbors(v):
            if u not in out:
                out[u] = (dv + 1, wv * r)
                q.append(u)
    return out


# -- kernel library -------------------------------------------------------------------


def _self(family, rec, idx):
    return {rec: Fraction(1)}


def _ratio_kernel(delta: Fraction) -> Rule:
    def rule(family, rec, idx):
        out: MassMap = defaultdict(Fraction)
        for u, _, r in family.neighbors(rec):
            if r == delta:
                out[u] += 1
        return dict(out)
    return rule


def _label_kernel(label: str) -> Rule:
    def rule(family, rec, idx):
        out: MassMap = defaultdict(Fraction)
        for u, lab, _ in family.neighbors(rec):
            if lab == label:
                out[u] += 1
        return dict(out)
    return rule


def _weighted_neighbours(family, rec, idx):
    out: MassMap = defaultdict(Fraction)
    for u, _, r in family.neighbors(rec):
        out[u] += r
    return dict(out)


def _two_step_paths(family, rec, idx):
    """Mass = number of length-two walks from ``rec`` to the target."""
    out: MassMap = defaultdict(Fraction)
    for u, _, _ in family.neighbors(rec):
        for z, _, _ in family.neighbors(u):
            out[z] += 1
    return dict(out)


def _common_neighbours(family, rec, idx):
    """Mass = number of common neighbours, for targets other than the source."""
    out = _two_step_paths(family, rec, idx)
    out.pop(rec, None)
    return out


def _heaviest_in_ball(radius: int) -> Rule:
    """Unit mass split evenly among the heaviest vertices within ``radius``."""
    def rule(family, rec, idx):
        ball = local_ball(family, rec, radius)
        top = max(w for _, w in ball.values())
        winners = [v for v, (_, w) in ball.items() if w == top]
        return {v: Fraction(1, len(winners)) for v in winners}
    return rule


def _parity(family, rec, idx):
    """Deliberately non-invariant: mass depends on the vertex's storage index."""
    if idx is None:
        raise ValueError("the parity kernel needs vertex indices")
    m = Fraction(1 if idx % 2 == 0 else 2)
    return {u: m for u, _, _ in family.neighbors(rec)}


def kernel_library(family: Family) -> list[TransportKernel]:
    ks = [TransportKernel("self", 0, _self),
          TransportKernel("weighted-neighbours", 1, _weighted_neighbours)]
    for delta in sorted(family.census()):
        ks.append(TransportKernel(f"ratio:{delta}", 1, _ratio_kernel(delta)))
    labels = sorted({lab for _, lab, _ in family.neighbors(family.root())})
    if len(labels) > 1:
        ks += [TransportKernel(f"label:{lab}", 1, _label_kernel(lab)) for lab in labels]
    ks += [TransportKernel("two-step-paths", 2, _two_step_paths),
           TransportKernel("common-neighbours", 2, _common_neighbours),
           TransportKernel("heaviest-in-ball:2", 2, _heaviest_in_ball(2)),
           TransportKernel("isolated-boundary", 1, isolated_boundary_rule)]
    return ks


def negative_control() -> TransportKernel:
    return TransportKernel("parity", 1, _parity, invariant=False)


# -- audit -------------------------------------------------------------------------


class _Evaluator:
    def __init__(self, t: Truncation, kernel: TransportKernel):
        self.t, self.k = t, kernel
        self.cache: dict[Hashable, MassMap] = {}

    def masses(self, rec) -> MassMap:
        m = self.cache.get(rec)
        if m is None:
            idx = self.t.index.get(rec)
            m = self.cache[rec] = self.k.rule(self.t.family, rec, idx)
        return m


def audit(t: Truncation, kernel: TransportKernel, pairs: Sequence[tuple[int, int]]
          ) -> list[AuditResult]:
    fam = t.family
    ev = _Evaluator(t, kernel)
    out = []
    for x, y in pairs:
        for v in (x, y):
            if t.dist[v] + kernel.radius > t.radius:
                raise FrontierError(f"kernel support around vertex {v} leaves the ball")
        xr, yr = t.records[x], t.records[y]
        out_sum = sum(ev.masses(xr).values(), Fraction(0))
        in_sum = Fraction(0)
        for z, (_, wz) in local_ball(fam, yr, kernel.radius).items():
            m = ev.masses(z).get(yr)
            if m:
                in_sum += m * wz
        out.append(AuditResult(kernel.name, x, y, out_sum, in_sum))
    return out


def admissible_pairs(t: Truncation, radius: int, count: int, rng: np.random.Generator
                     ) -> list[tuple[int, int]]:
    ok = np.flatnonzero(t.dist + radius <= t.radius)
    xs = rng.choice(ok, size=count)
    ys = rng.choice(ok, size=count)
    return list(zip(xs.tolist(), ys.tolist()))


def audit_report(results: Sequence[AuditResult]) -> str:
    return json.dumps([r.to_dict() for r in results], sort_keys=True)


# -- configuration-dependent boundary kernel ------------------------------------------------


def boundary_kernel(family: Family, cluster: set, rec) -> MassMap:
    """Mass ``w^x(y) / w^x(boundary of C(x))`` to each outer boundary vertex ``y`` of the
    (finite, open) cluster ``C(x)`` containing ``rec``; zero mass outside the cluster."""
    if rec not in cluster:
        return {}
    ball = _cluster_weights(family, cluster, rec)
    bd: dict = {}
    for v, wv in ball.items():
        for u, _, r in family.neighbors(v):
            if u not in cluster:
                bd[u] = wv * r
    total = sum(bd.values(), Fraction(0))
    return {u: w / total for u, w in bd.items()}


def _cluster_weights(family: Family, cluster: set, rec) -> dict:
    out = {rec: Fraction(1)}
    q = deque([rec])
    while q:
        v = q.popleft()
        for u, _, r in family.neighbors(v):
            if u in cluster and u not in out:
                out[u] = out[v] * r
                q.append(u)
    if len(out) != len(cluster):
        raise ValueError("fixture cluster is not connected")
    return out


def isolated_boundary_rule(family, rec, idx):
    """The boundary kernel for the configuration with every vertex isolated.

    That configuration is invariant, so the identity holds pair by pair.
    """
    return boundary_kernel(family, {rec}, rec)


@dataclass
class ConservationResult:
    cluster_size: int
    out_sums: list[Fraction]
    in_sums: list[Fraction]
    weighted_out: Fraction
    weighted_in: Fraction

    @property
    def equal(self) -> bool:
        return self.weighted_out == self.weighted_in and all(s == 1 for s in self.out_sums)


def audit_boundary_fixture(family: Family, cluster: Sequence) -> ConservationResult:
    """Exact weighted conservation for the boundary kernel on one frozen cluster.

    Every cluster vertex sends total mass one; every boundary vertex ``y``
    receives tilted mass ``sum_x f(x, y) w^y(x)``; weighting both by the
    vertex weights, the totals must agree exactly.
    """
    C = set(cluster)
    root = cluster[0]
    wC = _cluster_weights(family, C, root)
    masses = {x: boundary_kernel(family, C, x) for x in C}
    # weights of boundary vertices relative to the cluster root
    wy: dict = {}
    for x, wx in wC.items():
        for u, _, r in family.neighbors(x):
            if u not in C:
                wy[u] = wx * r
    out_sums = [sum(masses[x].values(), Fraction(0)) for x in cluster]
    in_sums = []
    for y in sorted(wy, key=repr):
        in_sums.append(sum((masses[x].get(y, Fraction(0)) * wC[x] / wy[y] for x in C),
                           Fraction(0)))
    weighted_out = sum((wC[x] * s for x, s in zip(cluster, out_sums)), Fraction(0))
    weighted_in = sum((wy[y] * s for y, s in zip(sorted(wy, key=repr), in_sums)), Fraction(0))
    return ConservationResult(len(C), out_sums, in_sums, weighted_out, weighted_in)
