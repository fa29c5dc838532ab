from fractions import Fraction

import numpy as np
import pytest

from nonuniperc import tmtp
from nonuniperc.families import (CartesianGPTree, DiestelLeader, FreeProduct, Grandparent,
                                 OrientedTree, UnimodularTree)
from nonuniperc.truncation import FrontierError, ball


def audit_all(fam, radius, pairs=40, seed=0):
    t = ball(fam, radius)
    rng = np.random.default_rng(seed)
    results = []
    for k in tmtp.kernel_library(fam):
        results += tmtp.audit(t, k, tmtp.admissible_pairs(t, k.radius, pairs, rng))
    return t, results


@pytest.mark.parametrize("fam", [OrientedTree(2, 3), Grandparent(2), DiestelLeader(2, 3),
                                 UnimodularTree(3), CartesianGPTree(2, 3),
                                 FreeProduct(Grandparent(2), UnimodularTree(3))], ids=str)
def test_every_shipped_kernel_balances(fam):
    _, results = audit_all(fam, 4 if fam.degree < 10 else 3)
    bad = [r.to_dict() for r in results if not r.equal]
    assert not bad


def test_self_kernel_sums_are_one():
    t = ball(Grandparent(2), 2)
    k = next(k for k in tmtp.kernel_library(Grandparent(2)) if k.name == "self")
    for r in tmtp.audit(t, k, [(0, 0), (3, 5)]):
        assert r.out_sum == r.in_sum == 1


def test_weighted_neighbour_kernel_out_sum_is_degree():
    t = ball(DiestelLeader(2, 3), 3)
    k = next(k for k in tmtp.kernel_library(DiestelLeader(2, 3))
             if k.name == "weighted-neighbours")
    (r,) = tmtp.audit(t, k, [(0, 1)])
    assert r.out_sum == 5


def test_untilted_sum_fails_off_unimodular():
    # the tilt matters: without w^y(z) the ratio kernel does not balance
    fam = OrientedTree(2, 3)
    rule = tmtp._ratio_kernel(Fraction(3, 2))
    out = sum(rule(fam, fam.root(), None).values())
    into = sum(rule(fam, z, None).get(fam.root(), 0) for z, _, _ in fam.neighbors(fam.root()))
    assert out == 2 and into == 3


def test_negative_control_is_caught():
    t = ball(Grandparent(2), 3)
    res = tmtp.audit(t, tmtp.negative_control(),
                     tmtp.admissible_pairs(t, 1, 100, np.random.default_rng(1)))
    assert not all(r.equal for r in res)
    assert not tmtp.negative_control().invariant


def test_support_must_fit():
    t = ball(Grandparent(2), 2)
    k = next(k for k in tmtp.kernel_library(Grandparent(2)) if k.radius == 2)
    edge = int(np.flatnonzero(t.dist == 1)[0])
    with pytest.raises(FrontierError):
        tmtp.audit(t, k, [(0, edge)])


def test_heaviest_kernel_ties_split_evenly():
    fam = Grandparent(2)
    masses = tmtp._heaviest_in_ball(2)(fam, fam.root(), None)
    assert sum(masses.values()) == 1
    assert len(masses) == 1  # the grandparent alone has weight 4


def test_boundary_fixture_conserves_weighted_mass():
    fam = OrientedTree(2, 3)
    root = fam.root()
    child = fam.neighbors(root)[0][0]
    grand = next(u for u, _, _ in fam.neighbors(child) if u != root)
    res = tmtp.audit_boundary_fixture(fam, [root, child, grand])
    assert res.cluster_size == 3
    assert all(s == 1 for s in res.out_sums)
    assert res.weighted_out == res.weighted_in
    assert res.equal


def test_boundary_kernel_outside_cluster_is_empty():
    fam = Grandparent(2)
    assert tmtp.boundary_kernel(fam, {fam.root()}, fam.neighbors(fam.root())[0][0]) == {}
    with pytest.raises(ValueError):
        far = fam.neighbors(fam.neighbors(fam.root())[0][0])[1][0]
        tmtp.audit_boundary_fixture(fam, [fam.root(), far])


def test_report_is_json():
    import json
    t = ball(UnimodularTree(3), 2)
    k = tmtp.kernel_library(UnimodularTree(3))[0]
    data = json.loads(tmtp.audit_report(tmtp.audit(t, k, [(0, 1)])))
    assert data[0]["equal"] is True
