import math
from collections import Counter, deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonuniperc.families import DiestelLeader, Grandparent, OrientedTree, UnimodularTree
from nonuniperc.truncation import (BudgetExceeded, FrontierError, band_ids, band_partition, ball,
                                   cocycle_sum, induce_slice, sample_closed_walks, wire,
                                   wired_quotient)


def bfs_oracle(fam, radius):
    """Independent ball: plain BFS over family records with a set."""
    seen = {fam.root(): 0}
    q = deque([fam.root()])
    while q:
        v = q.popleft()
        if seen[v] == radius:
            continue
        for u, _, _ in fam.neighbors(v):
            if u not in seen:
                seen[u] = seen[v] + 1
                q.append(u)
    return seen


def test_regular_tree_counts():
    t = ball(UnimodularTree(3), 2)
    assert t.n == 10
    assert t.m == 9


def test_t23_radius_one():
    t = ball(OrientedTree(2, 3), 1)
    assert (t.n, t.m) == (6, 5)


@pytest.mark.parametrize("fam,r", [(Grandparent(2), 2), (Grandparent(2), 3),
                                   (DiestelLeader(2, 3), 3), (OrientedTree(1, 2), 4)], ids=str)
def test_ball_matches_bfs_oracle(fam, r):
    t = ball(fam, r)
    oracle = bfs_oracle(fam, r)
    assert t.n == len(oracle)
    assert {rec: int(d) for rec, d in zip(t.records, t.dist)} == oracle


def test_edges_count_with_multiplicity():
    # sum of in-ball degrees equals twice the edge count
    t = ball(Grandparent(2), 3)
    assert sum(len(t.neighbors(i)) for i in range(t.n)) == 2 * t.m
    assert t.adjacency.sum() == 2 * t.m


def test_budget_error():
    with pytest.raises(BudgetExceeded):
        ball(Grandparent(2), 6, max_vertices=100)


def test_levels():
    t = ball(Grandparent(2), 1)
    assert t.level_index(0) == (0,)
    parent = next(j for j, lab, _ in t.rows[0] if lab == "parent")
    assert t.level_index(parent) == (1,)
    d = ball(DiestelLeader(2, 3), 1)
    assert d.primes == (2, 3)
    up = next(j for j, _, q in d.rows[0] if q > 1)
    assert dict(zip(d.primes, d.level_index(up))) == {3: 1, 2: -1}


def test_interior_excludes_frontier():
    t = ball(OrientedTree(2, 3), 3)
    assert np.all(t.dist[t.interior] < 3)
    with pytest.raises(FrontierError):
        t.require_interior(np.flatnonzero(t.frontier)[:1])


def test_slice_of_all_levels_is_identity():
    t = ball(Grandparent(2), 3)
    s = induce_slice(t, {tuple(x) for x in t.levels.tolist()})
    assert len(s.vertices) == t.n
    assert len(s.edge_ids) == t.m


def test_dl_levels_are_independent_sets():
    t = ball(DiestelLeader(2, 3), 4)
    for lv in {tuple(x) for x in t.levels.tolist()}:
        assert len(induce_slice(t, [lv]).edge_ids) == 0


def test_band_partition_limits():
    t = ball(Grandparent(2), 3)
    assert band_partition(t, math.inf).all()
    assert not band_partition(t, 1).any()


def test_t12_width3_band_root_component():
    # root at the top of its band: the band holds the root and two generations below
    t = ball(OrientedTree(1, 2), 6)
    top = int(t.levels[0, 0])
    mask = band_partition(t, 3, offset=top - 2)
    from nonuniperc.truncation import Subgraph
    comp = Subgraph(t, np.arange(t.n), np.flatnonzero(mask)).component_of(0)
    assert len(comp) == 7
    assert band_ids(t, 3, top - 2)[0, 0] == 0


def test_wired_path_of_three():
    # ends merged into one sink: two parallel edges between middle vertex and sink
    edges = np.array([[0, 1], [1, 2]])
    frontier = np.array([True, False, True])
    wq = wire(None, edges, frontier)
    assert wq.n == 2
    assert sorted(tuple(sorted(e)) for e in wq.edges.tolist()) == [(0, 1), (0, 1)]


@pytest.mark.parametrize("fam,par", [(UnimodularTree(3), 3), (OrientedTree(2, 3), 5)], ids=str)
def test_wired_star(fam, par):
    wq = wired_quotient(ball(fam, 1))
    assert wq.n == 2
    assert len(wq.edges) == par


def test_wired_needs_frontier():
    with pytest.raises(FrontierError):
        wire(None, np.array([[0, 1]]), np.array([False, False]))


def test_wired_counts_on_ball():
    t = ball(Grandparent(2), 3)
    wq = wired_quotient(t)
    assert wq.n == len(t.interior) + 1
    both = t.frontier[t.edges[:, 0]] & t.frontier[t.edges[:, 1]]
    assert len(wq.edges) == t.m - int(both.sum())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([Grandparent(2), DiestelLeader(2, 3),
                                                   OrientedTree(2, 3)]))
def test_closed_walks_have_zero_cocycle(seed, fam):
    t = ball(fam, 6)
    for w in sample_closed_walks(t, 50, np.random.default_rng(seed)):
        assert w[0] == w[-1]
        assert len(w) - 1 <= 12
        assert all(b in t.neighbors(a) for a, b in zip(w, w[1:]))
        assert not cocycle_sum(t, w)


def test_nonclosed_walk_has_nonzero_cocycle():
    t = ball(Grandparent(2), 2)
    parent = next(j for j, lab, _ in t.rows[0] if lab == "parent")
    assert cocycle_sum(t, [0, parent]).value() == 2


def test_dump_round_trip_header():
    t = ball(OrientedTree(2, 3), 2)
    text = t.dump()
    lines = text.splitlines()
    assert lines[0] == f"# T(2,3) 2 {t.n} {t.m}"
    kinds = Counter(line.split()[0] for line in lines[1:])
    assert kinds == {"V": t.n, "E": t.m}
    assert text == ball(OrientedTree(2, 3), 2).dump()
