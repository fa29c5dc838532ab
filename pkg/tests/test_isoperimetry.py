import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonuniperc import isoperimetry as iso
from nonuniperc.families import DiestelLeader, Grandparent, OrientedTree, UnimodularTree
from nonuniperc.truncation import BudgetExceeded, FrontierError, ball

BALLS = {f: ball(f, 4) for f in (OrientedTree(2, 3), Grandparent(2), DiestelLeader(2, 3),
                                 UnimodularTree(3), OrientedTree(1, 2))}


def test_root_alone():
    t = BALLS[Grandparent(2)]
    f = iso.functionals(t, [0])
    assert f.avg_inner_degree == 0
    assert f.iota == 8
    assert f.phi_v == 8  # boundary is all eight neighbours, total weight d


def test_root_and_parent_in_gp2():
    t = BALLS[Grandparent(2)]
    parent = next(j for j, lab, _ in t.rows[0] if lab == "parent")
    f = iso.functionals(t, [0, parent])
    assert f.avg_inner_degree == 1
    assert f.iota == 7
    assert iso.avg_inner_degree(t, [0, parent]) == 1


def test_frontier_sets_rejected():
    t = BALLS[Grandparent(2)]
    with pytest.raises(FrontierError):
        iso.functionals(t, [int(np.flatnonzero(t.frontier)[0])])


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(BALLS, key=str)), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_identity_and_sandwich_on_random_sets(fam, size, seed):
    t = BALLS[fam]
    F = iso.random_connected_set(t, size, np.random.default_rng(seed))
    assert len(set(F)) == len(F)
    f = iso.functionals(t, F)
    assert f.avg_inner_degree + f.iota == fam.degree
    assert iso.sandwich_audit(t, F)["passed"]


def test_random_set_is_connected_and_interior():
    t = BALLS[DiestelLeader(2, 3)]
    F = iso.random_connected_set(t, 15, np.random.default_rng(3))
    assert not t.frontier[F].any()
    seen, stack = {F[0]}, [F[0]]
    while stack:
        v = stack.pop()
        for u in t.neighbors(v):
            if u in F and u not in seen:
                seen.add(u)
                stack.append(u)
    assert seen == set(F)


@pytest.mark.parametrize("fam", [Grandparent(2), OrientedTree(1, 3), DiestelLeader(2, 3)], ids=str)
def test_cone_aggregation_matches_enumeration(fam):
    for n in range(5):
        spec = iso.cone_spec(fam, n)
        a, b = iso.cone_functionals(spec), iso.explicit_cone_functionals(spec)
        assert (a.w_F, a.w_boundary, a.iota_num, a.inner_edge_weight) == \
               (b.w_F, b.w_boundary, b.iota_num, b.inner_edge_weight)
        assert math.isclose(a.c_boundary, b.c_boundary, rel_tol=1e-12)


def test_cone_ratio_closed_forms():
    # per generation the cone carries total weight one; the boundary is generation-free
    for n in range(0, 61):
        assert iso.folner_cone(Grandparent(2), n).phi_v == Fraction(8, n + 1)
        assert iso.folner_cone(OrientedTree(1, 3), n).phi_v == Fraction(4, n + 1)
    for n in range(0, 8):
        assert iso.folner_cone(DiestelLeader(2, 3), n).phi_v == Fraction(5, n + 1)


def test_cone_depth_zero_is_root():
    w = iso.folner_cone(Grandparent(3), 0)
    assert w.phi_v == Grandparent(3).degree == 14
    assert len(w.addresses) == 1


def test_cone_unsupported_family():
    with pytest.raises(TypeError):
        iso.folner_cone(UnimodularTree(3), 2)
    with pytest.raises(TypeError):
        iso.folner_cone(OrientedTree(2, 3), 2)


def test_cone_sandwich_gp2_depth3():
    t = ball(Grandparent(2), 6)
    spec = iso.cone_spec(Grandparent(2), 3)
    F = [t.index[r] for r in iso.cone_members(spec)]
    assert iso.sandwich_audit(t, F)["passed"]
    assert iso.functionals(t, F).phi_v == Fraction(2)


def tree_min_ratio(d, n):
    # any connected n-set of a d-regular tree has (d - 2) n + 2 boundary vertices
    return Fraction((d - 2) * n + 2, n)


def test_exhaustive_on_regular_tree():
    t = ball(UnimodularTree(3), 5)
    for k in range(1, 7):
        r, S, count = iso.exhaustive_min(t, k)
        assert r == tree_min_ratio(3, k)
        r2, count2 = iso.exhaustive_min_bfs(t, k)
        assert (r2, count2) == (r, count)


@pytest.mark.parametrize("fam", [Grandparent(2), DiestelLeader(2, 3), OrientedTree(2, 3)], ids=str)
def test_two_enumerators_agree(fam):
    t = BALLS[fam]
    for k in (1, 3, 5):
        a = iso.exhaustive_min(t, k)
        assert iso.exhaustive_min_bfs(t, k) == (a[0], a[2])
        assert iso.functionals(t, a[1]).phi_v == a[0]


def test_esu_lists_each_set_once():
    t = BALLS[Grandparent(2)]
    sets = [frozenset(s) for s in iso.connected_sets_esu(t, 4)]
    assert len(sets) == len(set(sets))
    assert len(sets) == iso.exhaustive_min(t, 4)[2]


def test_exhaustive_size_one_and_cap():
    t = BALLS[OrientedTree(2, 3)]
    w = iso.witness_search_exhaustive(t, 1)
    assert len(w.addresses) == 1 and w.phi_v == 5
    with pytest.raises(BudgetExceeded):
        iso.exhaustive_min(t, iso.EXHAUSTIVE_CAP + 1)


def test_greedy_never_beats_tree_cheeger():
    t = ball(UnimodularTree(3), 7)
    assert iso.witness_search_greedy(t, 50).phi_v >= 1


def test_greedy_beats_small_cones():
    t = ball(Grandparent(2), 6)
    g = iso.witness_search_greedy(t, 20)
    cones = [iso.folner_cone(Grandparent(2), n).phi_v for n in range(6) if 2 ** (n + 1) - 1 <= 20]
    assert g.phi_v <= min(cones)


def test_greedy_budget_one():
    w = iso.witness_search_greedy(BALLS[Grandparent(2)], 1)
    assert len(w.addresses) == 1 and w.phi_v == 8
    with pytest.raises(ValueError):
        iso.witness_search_greedy(BALLS[Grandparent(2)], 0)


def test_witness_json():
    w = iso.folner_cone(Grandparent(2), 4)
    d = json.loads(w.to_json())
    assert d["provenance"] == "cone"
    assert Fraction(d["phi_v"]) == Fraction(8, 5)
    assert d["family"] == {"family": "gp", "k": 2}
