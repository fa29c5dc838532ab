"""Weighted Cheeger functionals of finite vertex sets and witness searches."""

from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Sequence

import numpy as np

from .families import DiestelLeader, Family, Grandparent, OrientedTree, family_to_dict
from .truncation import BudgetExceeded, FrontierError, Truncation
from .weights import ONE, LogWeight

EXHAUSTIVE_CAP = 9


@dataclass
class SetFunctionals:
    w_F: Fraction
    w_boundary: Fraction
    iota_num: Fraction
    c_boundary: float
    inner_edge_weight: Fraction
    degree: int
    sqrt_degree: float

    @property
    def phi_v(self) -> Fraction:
        return self.w_boundary / self.w_F

    @property
    def iota(self) -> Fraction:
        return self.iota_num / self.w_F

    @property
    def phi_e(self) -> float:
        return self.c_boundary / float(self.w_F)

    @property
    def avg_inner_degree(self) -> Fraction:
        return self.inner_edge_weight / self.w_F


def functionals(t: Truncation, F: Iterable[int]) -> SetFunctionals:
    """Exact functionals of a vertex set lying strictly inside the ball."""
    S = set(F)
    if not S:
        raise ValueError("empty set")
    t.require_interior(S)
    w = t.weights
    D = t.family.sqrt_degree()
    w_F = sum((w[x] for x in S), Fraction(0))
    boundary: set[int] = set()
    iota = Fraction(0)
    inner = Fraction(0)
    c_terms = []
    for x in S:
        for z, _, q in t.rows[x]:
            if z in S:
                # every inner edge is seen from both ends
                inner += w[x]
            else:
                boundary.add(z)
                iota += w[x]
                c_terms.append(math.sqrt(w[x] * w[z]))
    w_b = sum((w[z] for z in boundary), Fraction(0))
    return SetFunctionals(w_F, w_b, iota, math.fsum(c_terms) / D, inner, t.degree, D)


def avg_inner_degree(t: Truncation, F: Iterable[int]) -> Fraction:
    """Inner weighted degree; ``avg_inner_degree + iota == d`` exactly."""
    f = functionals(t, F)
    if f.avg_inner_degree + f.iota != t.degree:
        raise AssertionError("inner degree and boundary do not add up to the degree")
    return f.avg_inner_degree


def sandwich_audit(t: Truncation, F: Iterable[int], tol: float = 1e-10) -> dict:
    """Per-set numerator inequalities between the three boundary functionals."""
    f = functionals(t, F)
    d, D = f.degree, f.sqrt_degree
    c = f.c_boundary
    iota, wb = float(f.iota_num), float(f.w_boundary)
    scale = max(1.0, c, iota, wb)
    checks = {
        "iota_lower": iota / (math.sqrt(d) * D) <= c + tol * scale,
        "iota_upper": c <= iota + tol * scale,
        "vertex_lower": wb / (math.sqrt(d) * D) <= c + tol * scale,
        "vertex_upper": c <= (d / D) * wb + tol * scale,
        "vertex_tight": c <= wb + tol * scale,
    }
    return {"c": c, "iota_num": iota, "w_boundary": wb, "checks": checks,
            "passed": all(checks.values())}


# -- witnesses -----------------------------------------------------------------------


@dataclass
class Witness:
    family: Family
    provenance: str
    params: dict
    addresses: list[str]
    phi_v: Fraction
    iota: Fraction
    phi_e: float
    vertices: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "family": family_to_dict(self.family),
            "provenance": self.provenance,
            "params": self.params,
            "set": self.addresses,
            "phi_v": str(self.phi_v),
            "iota": str(self.iota),
            "phi_e_c": self.phi_e,
        }, sort_keys=True)


def _witness(t: Truncation, F: Sequence[int], provenance: str, params: dict) -> Witness:
    f = functionals(t, F)
    Fs = sorted(F)
    return Witness(t.family, provenance, params, [t.address(v) for v in Fs],
                   f.phi_v, f.iota, f.phi_e, Fs)


def witness_search_greedy(t: Truncation, budget: int) -> Witness:
    """Grow a set from the root, each time adding the boundary vertex giving the
    smallest vertex ratio; return the best set met along the way."""
    interior = int((~t.frontier).sum())
    if not 1 <= budget <= interior:
        raise ValueError(f"budget must lie in [1, {interior}]")
    w = t.weights
    S = {0}
    cnt: Counter[int] = Counter(j for j in t.neighbors(0))
    wF = w[0]
    wb = sum((w[z] for z in cnt), Fraction(0))
    best = (wb / wF, 1)
    order = [0]
    while len(S) < budget:
        choice = None
        for v in sorted(cnt):
            if t.frontier[v]:
                continue
            new = {z for z in t.neighbors(v) if z not in S and z not in cnt}
            ratio = (wb - w[v] + sum((w[z] for z in new), Fraction(0))) / (wF + w[v])
            if choice is None or ratio < choice[0]:
                choice = (ratio, v)
        if choice is None:
            break
        ratio, v = choice
        S.add(v)
        order.append(v)
        wF += w[v]
        wb -= w[v]
        del cnt[v]
        for z in t.neighbors(v):
            if z not in S:
                if z not in cnt:
                    wb += w[z]
                cnt[z] += 1
        if ratio < best[0]:
            best = (ratio, len(S))
    return _witness(t, order[: best[1]], "greedy", {"budget": budget})


def _integer_weights(t: Truncation) -> tuple[list[int], int]:
    den = math.lcm(*(q.denominator for q in t.weights))
    return [int(q * den) for q in t.weights], den


def connected_sets_esu(t: Truncation, max_size: int) -> Iterator[tuple[int, ...]]:
    """Each connected interior set containing the root exactly once (extension-set
    enumeration: a vertex may only enter through the first set member it touches)."""
    allowed = ~t.frontier
    nb = [sorted(set(t.neighbors(v))) for v in range(t.n)]

    def rec(S: list[int], ext: list[int], closed: set[int]):
        yield tuple(S)
        if len(S) == max_size:
            return
        ext = list(ext)
        while ext:
            v = ext.pop()
            fresh = [u for u in nb[v] if u not in closed and allowed[u]]
            S.append(v)
            yield from rec(S, ext + fresh, closed | set(fresh))
            S.pop()

    if not allowed[0]:
        return
    start = [u for u in nb[0] if allowed[u]]
    yield from rec([0], start, {0, *start})


def exhaustive_min(t: Truncation, max_size: int) -> tuple[Fraction, tuple[int, ...], int]:
    """Minimal vertex ratio over connected interior root sets of size <= max_size.

    Returns ``(ratio, minimiser, number of sets)``.  The search keeps running
    integer-scaled totals instead of re-evaluating each set.
    """
    if max_size > EXHAUSTIVE_CAP:
        raise BudgetExceeded(f"exhaustive search is capped at size {EXHAUSTIVE_CAP}")
    W, den = _integer_weights(t)
    allowed = ~t.frontier
    nb = [sorted(set(t.neighbors(v))) for v in range(t.n)]
    best = [None, None]  # (num, den) of the ratio, set
    count = 0
    inS = bytearray(t.n)
    cnt = [0] * t.n

    def add(v, state):
        wF, wb = state
        inS[v] = 1
        wF += W[v]
        if cnt[v]:
            wb -= W[v]
        for u in nb[v]:
            if not inS[u]:
                if cnt[u] == 0:
                    wb += W[u]
                cnt[u] += 1
        return wF, wb

    def remove(v):
        for u in nb[v]:
            if not inS[u]:
                cnt[u] -= 1
        inS[v] = 0

    def rec(S, ext, closed, state):
        nonlocal count
        count += 1
        wF, wb = state
        b = best[0]
        if b is None or wb * b[1] < b[0] * wF:
            best[0] = (wb, wF)
            best[1] = tuple(S)
        if len(S) == max_size:
            return
        ext = list(ext)
        while ext:
            v = ext.pop()
            fresh = [u for u in nb[v] if u not in closed and allowed[u]]
            new_state = add(v, state)
            S.append(v)
            rec(S, ext + fresh, closed | set(fresh), new_state)
            S.pop()
            remove(v)

    if not allowed[0] or max_size < 1:
        raise FrontierError("the root must be interior")
    st = add(0, (0, 0))
    start = [u for u in nb[0] if allowed[u]]
    rec([0], start, {0, *start}, st)
    (num, dd), S = best
    return Fraction(num, dd), S, count


def exhaustive_min_bfs(t: Truncation, max_size: int) -> tuple[Fraction, int]:
    """Independent oracle: level-by-level set growth with explicit deduplication and
    direct rational evaluation of every set."""
    if max_size > EXHAUSTIVE_CAP:
        raise BudgetExceeded(f"exhaustive search is capped at size {EXHAUSTIVE_CAP}")
    w = t.weights
    allowed = ~t.frontier
    layer = {(0,)}
    best = None
    total = 0
    for size in range(1, max_size + 1):
        for S in layer:
            Sset = set(S)
            wF = sum(w[x] for x in S)
            bd = {z for x in S for z in t.neighbors(x) if z not in Sset}
            r = sum(w[z] for z in bd) / wF
            if best is None or r < best:
                best = r
        total += len(layer)
        if size == max_size:
            break
        nxt = set()
        for S in layer:
            Sset = set(S)
            for x in S:
                for z in t.neighbors(x):
                    if z not in Sset and allowed[z]:
                        nxt.add(tuple(sorted(Sset | {z})))
        layer = nxt
    return Fraction(best), total


def witness_search_exhaustive(t: Truncation, max_size: int) -> Witness:
    ratio, S, _ = exhaustive_min(t, max_size)
    return _witness(t, list(S), "exhaustive", {"max_size": max_size})


def random_connected_set(t: Truncation, size: int, rng: np.random.Generator,
                         start: int = 0) -> list[int]:
    """Random interior connected set grown from ``start`` by uniform boundary picks."""
    S = [start]
    inS = {start}
    frontier_list = [z for z in dict.fromkeys(t.neighbors(start)) if not t.frontier[z]]
    while len(S) < size and frontier_list:
        v = frontier_list.pop(int(rng.integers(len(frontier_list))))
        if v in inS:
            continue
        S.append(v)
        inS.add(v)
        for z in t.neighbors(v):
            if z not in inS and not t.frontier[z] and z not in frontier_list:
                frontier_list.append(z)
    return S


# -- Folner cones -----------------------------------------------------------------------


@dataclass
class ConeSpec:
    """A set described by orbit-class representatives.

    Every member of a class looks the same from inside the set, so sums over the
    set are ``size * (value at the representative)``.
    """

    family: Family
    depth: int
    classes: list[tuple[Hashable, int, LogWeight]]
    member: Callable[[Hashable], bool]


def _all_down(word: tuple) -> bool:
    return all(c & 1 for c in word)


def cone_spec(family: Family, n: int) -> ConeSpec:
    if n < 0:
        raise ValueError("depth must be nonnegative")
    if isinstance(family, OrientedTree) and family.r == 1:
        c, ratio = family.s, Fraction(1, family.s)
        classes = [((1,) * j, c**j, LogWeight.from_ratio(ratio**j)) for j in range(n + 1)]
        return ConeSpec(family, n, classes, lambda w: _all_down(w) and len(w) <= n)
    if isinstance(family, Grandparent):
        c, ratio = family.k, Fraction(1, family.k)
        classes = [((1,) * j, c**j, LogWeight.from_ratio(ratio**j)) for j in range(n + 1)]
        return ConeSpec(family, n, classes, lambda w: _all_down(w) and len(w) <= n)
    if isinstance(family, DiestelLeader):
        k, l = family.k, family.l
        classes = [(((1,) * i, (0,) * i), k**i * l ** (n - i),
                     LogWeight.from_ratio(Fraction(l, k) ** i)) for i in range(n + 1)]

        def member(rec):
            x, y = rec
            ups = sum(1 for ch in y if not ch & 1)
            return _all_down(x) and len(x) <= n and ups <= n
        return ConeSpec(family, n, classes, member)
    raise TypeError(f"cones are defined for T(1,s), GP(k) and DL(k,l), not {family}")


def cone_functionals(spec: ConeSpec) -> SetFunctionals:
    """Aggregate the functionals over classes.

    A boundary vertex ``z`` adjacent to ``m`` members is met ``m`` times while
    scanning boundary edges, so it contributes ``w(z) / m`` each time.
    """
    fam = spec.family
    D = fam.sqrt_degree()
    w_F = Fraction(0)
    w_b = Fraction(0)
    iota = Fraction(0)
    inner = Fraction(0)
    c_terms = []
    for rep, size, lw in spec.classes:
        wx = lw.value()
        w_F += size * wx
        for z, _, q in fam.neighbors(rep):
            if spec.member(z):
                inner += size * wx
                continue
            wz = wx * q
            m = sum(1 for u, _, _ in fam.neighbors(z) if spec.member(u))
            w_b += size * wz / m
            iota += size * wx
            c_terms.append(size * math.sqrt(wx * wz))
    return SetFunctionals(w_F, w_b, iota, math.fsum(c_terms) / D, inner, fam.degree, D)


def cone_members(spec: ConeSpec, limit: int = 200_000) -> list[Hashable]:
    """Explicit member list, grown from the root by neighbour expansion."""
    fam = spec.family
    root = fam.root()
    seen = {root}
    out = [root]
    q = deque([root])
    while q:
        v = q.popleft()
        for u, _, _ in fam.neighbors(v):
            if u not in seen and spec.member(u):
                seen.add(u)
                out.append(u)
                q.append(u)
                if len(out) > limit:
                    raise BudgetExceeded("cone too large to enumerate")
    return out


def explicit_cone_functionals(spec: ConeSpec) -> SetFunctionals:
    """Direct evaluation over enumerated members; oracle for :func:`cone_functionals`."""
    fam = spec.family
    D = fam.sqrt_degree()
    members = cone_members(spec)
    wt: dict = {fam.root(): Fraction(1)}
    q = deque([fam.root()])
    inset = set(members)
    while q:
        v = q.popleft()
        for u, _, r in fam.neighbors(v):
            if u in inset and u not in wt:
                wt[u] = wt[v] * r
                q.append(u)
    w_F = sum(wt.values(), Fraction(0))
    bd: dict = {}
    iota = Fraction(0)
    inner = Fraction(0)
    c_terms = []
    for x in members:
        for z, _, r in fam.neighbors(x):
            if z in inset:
                inner += wt[x]
            else:
                bd[z] = wt[x] * r
                iota += wt[x]
                c_terms.append(math.sqrt(wt[x] * wt[x] * r))
    return SetFunctionals(w_F, sum(bd.values(), Fraction(0)), iota,
                          math.fsum(c_terms) / D, inner, fam.degree, D)


def folner_cone(family: Family, n: int) -> Witness:
    spec = cone_spec(family, n)
    f = cone_functionals(spec)
    addresses = [family.address(rep) for rep, _, _ in spec.classes]
    return Witness(family, "cone", {"depth": n, "class_representatives": True}, addresses,
                   f.phi_v, f.iota, f.phi_e)
