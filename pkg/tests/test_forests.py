from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonuniperc import forests as fo
from nonuniperc.families import DiestelLeader, Grandparent, OrientedTree, UnimodularTree
from nonuniperc.truncation import FrontierError, ball


def graph(n, edges, labels, weights=None, frontier=None):
    return fo.LabeledGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2),
                           np.array(labels, dtype=float),
                           weights or [Fraction(1)] * n,
                           np.zeros(n, bool) if frontier is None else np.array(frontier))


def random_graph(rng):
    n = int(rng.integers(2, 10))
    m = int(rng.integers(1, 14))
    edges = []
    while len(edges) < m:
        a, b = rng.integers(n, size=2)
        if a != b:
            edges.append((int(a), int(b)))
    # weights from a random potential keep every cycle's ratio product at one
    weights = [Fraction(2) ** int(k) for k in rng.integers(-2, 3, size=n)]
    return graph(n, edges, rng.random(m), weights)


def test_tree_keeps_everything():
    g = graph(4, [(0, 1), (1, 2), (1, 3)], [0.9, 0.1, 0.5])
    assert fo.fmsf(g).kept.all()
    assert fo.fmaxsf_w(g).kept.all()


def test_triangle_drops_largest_label():
    g = graph(3, [(0, 1), (1, 2), (2, 0)], [0.2, 0.5, 0.9])
    assert fo.fmsf(g).kept.tolist() == [True, True, False]


@pytest.mark.parametrize("labels,dropped", [([0.1, 0.2, 0.3, 0.4], 3), ([0.1, 0.2, 0.4, 0.3], 2)])
def test_weighted_four_cycle(labels, dropped):
    w = [Fraction(1), Fraction(2), Fraction(1), Fraction(1, 2)]
    g = graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], labels, w)
    assert [g.edge_weight(e) for e in range(4)] == [1, 1, Fraction(1, 2), Fraction(1, 2)]
    kept = fo.fmaxsf_w(g).kept
    assert np.flatnonzero(~kept).tolist() == [dropped]


def test_kruskal_matches_cycle_rule_on_random_graphs():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        g = random_graph(rng)
        for order in (fo.fmsf_order(g), fo.fmaxsf_order(g)):
            kept = fo.kruskal(g.n, g.edges, order)
            assert np.array_equal(kept, fo.cycle_rule(g.n, g.edges, fo.rank_of(order)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forest_invariants(seed):
    g = random_graph(np.random.default_rng(seed))
    for fc in (fo.fmsf(g), fo.fmaxsf_w(g)):
        assert fc.is_acyclic()
        # same components as the whole graph
        full = fo.ForestConfig(np.ones(g.m, bool), g.n, g.edges)
        assert fc.tree_count == full.tree_count


def test_multi_edges_form_cycles():
    g = graph(2, [(0, 1), (0, 1)], [0.4, 0.6])
    assert fo.fmsf(g).kept.tolist() == [True, False]
    assert len(fo.simple_cycles(2, g.edges)) == 1


def test_constant_weights_collapse_to_fmsf():
    t = ball(UnimodularTree(3), 4)
    g = fo.label_truncation(t, 5)
    assert np.array_equal(fo.fmsf(g).kept, fo.fmaxsf_w(g).kept)
    rng = np.random.default_rng(0)
    for _ in range(50):
        h = random_graph(rng)
        h.weights[:] = [Fraction(3)] * h.n
        assert np.array_equal(fo.fmsf(h).kept, fo.fmaxsf_w(h).kept)


def test_wired_path_drops_larger_label():
    g = graph(3, [(0, 1), (1, 2)], [0.3, 0.7], frontier=[True, False, True])
    assert fo.wmaxsf_w(g).kept.tolist() == [True, False]
    assert fo.fmaxsf_w(g).kept.all()


def test_wired_equals_free_without_frontier_paths():
    # one frontier leaf: wiring merges a single vertex, so nothing changes
    g = graph(4, [(0, 1), (1, 2), (2, 3), (3, 1)], [0.1, 0.5, 0.2, 0.9],
              frontier=[False, False, False, True])
    assert np.array_equal(fo.wmaxsf_w(g).kept, fo.fmaxsf_w(g).kept)
    with pytest.raises(FrontierError):
        fo.wmaxsf_w(graph(2, [(0, 1)], [0.5]))


@pytest.mark.parametrize("fam", [Grandparent(2), DiestelLeader(2, 3), OrientedTree(2, 3)], ids=str)
def test_wired_forest_sits_inside_free_forest(fam):
    t = ball(fam, 3)
    for rep in range(5):
        g = fo.label_truncation(t, 1, rep)
        free, wired = fo.fmaxsf_w(g), fo.wmaxsf_w(g)
        assert free.tree_count == 1 and free.is_acyclic()
        assert np.all(free.kept | ~wired.kept)
        assert wired.is_acyclic()


def test_end_proxy():
    t = ball(UnimodularTree(3), 4)
    g = fo.label_truncation(t, 0)
    whole = fo.fmsf(g)
    (row,) = fo.tree_end_proxy(whole, g)
    assert row["nonvanishing"] == row["all"] == int(t.frontier.sum())
    empty = fo.ForestConfig(np.zeros(t.m, bool), t.n, t.edges)
    rows = fo.tree_end_proxy(empty, g)
    assert len(rows) == t.n
    assert sorted({r["all"] for r in rows}) == [0, 1]
    assert sum(r["all"] for r in rows) == int(t.frontier.sum())


def test_tree_stats_cover_all_vertices():
    t = ball(Grandparent(2), 3)
    g = fo.label_truncation(t, 0)
    stats = fo.fmsf(g).tree_stats(g)
    assert sum(s["vertices"] for s in stats) == t.n


def test_hyperfinite_stage_one_root_component():
    t = ball(OrientedTree(1, 2), 6)
    top = int(t.levels[0, 0])
    h = fo.hyperfinite_spanning_tree(t, [3, 6], seed=4, offset=top - 2)
    assert (h.stage_components[0] == h.stage_components[0][0]).sum() == 7
    assert h.forest.is_acyclic() and h.forest.tree_count == 1


@pytest.mark.parametrize("fam", [Grandparent(2), DiestelLeader(2, 3), OrientedTree(1, 3)], ids=str)
def test_hyperfinite_is_spanning_tree(fam):
    t = ball(fam, 4)
    for widths in ([1], [2, 4], [100]):
        h = fo.hyperfinite_spanning_tree(t, widths, seed=1)
        assert h.forest.is_acyclic()
        assert h.forest.tree_count == 1
        # stages only grow the components
        counts = [len(np.unique(c)) for c in h.stage_components]
        assert counts == sorted(counts, reverse=True)


def test_hyperfinite_rejects_bad_input():
    with pytest.raises(TypeError):
        fo.hyperfinite_spanning_tree(ball(OrientedTree(2, 3), 2), [2], 0)
    with pytest.raises(ValueError):
        fo.hyperfinite_spanning_tree(ball(Grandparent(2), 2), [2, 3], 0)
