from fractions import Fraction

import pytest
from oracles import lattice_optimum

from cutlab.cuts import cg_cut_from_weights
from cutlab.instance import Cut
from cutlab.lp import solve_lp
from cutlab.shatter import (
    Score,
    ShatterConfig,
    ShatterError,
    build_shatter_instance,
    strong_region,
    verify_shattering,
    verify_tableau_lemma,
    weak_region,
    weight_region_representatives,
)

F = Fraction
GAMMAS = [F(1, 8), F(1, 4), F(3, 8), F(49, 100)]


def test_instance_values():
    inst = build_shatter_instance((-1, -1), F(1, 4))
    sol = solve_lp(inst)
    assert sol.x_star == (2, F(3, 2)) and sol.objective == F(7, 2)
    assert lattice_optimum(inst, [(0, 2), (0, 2)]) == 3


def test_padding_keeps_objective():
    inst = build_shatter_instance((-1, -1), F(1, 4), n=5, m=7)
    assert (inst.n, inst.m) == (5, 7)
    assert solve_lp(inst).objective == F(7, 2)


def test_gamma_range():
    for bad in (0, F(1, 2), F(-1, 10), 1):
        with pytest.raises(ShatterError):
            build_shatter_instance((-1, -1), bad)
        with pytest.raises(ShatterError):
            ShatterConfig(bad, ((-1, -1),))
    with pytest.raises(ShatterError):
        build_shatter_instance((1, -1), F(1, 4))


@pytest.mark.parametrize("gamma", GAMMAS)
def test_representatives_give_expected_cuts(gamma):
    strong, weak = weight_region_representatives(gamma)
    inst = build_shatter_instance((-1, -1), gamma)
    assert cg_cut_from_weights(inst, strong) == Cut((1, 1), 3)
    assert cg_cut_from_weights(inst, weak) == Cut((1, 0), 3)


def test_weak_representative_at_quarter():
    assert weight_region_representatives(F(1, 4))[1] == (0, F(1, 2), F(1, 3))


def test_region_limits():
    (lo2, hi2), _ = strong_region(F(1, 10**9))
    assert hi2 > F(1, 2) and 1 - F(25, 72) > F(1, 2)
    for g in GAMMAS:
        for (lo2, hi2), (lo3, hi3) in (strong_region(g), weak_region(g)):
            assert lo2 <= hi2 and lo3 < hi3


@pytest.mark.parametrize("gamma", GAMMAS)
def test_gap_closed_shattering(gamma):
    cfg = ShatterConfig(gamma, ((-1, -1), (0, -1), (-2, -3)))
    rep = verify_shattering(cfg, Score.GAP_CLOSED)
    assert rep.verdict, rep.failures
    assert rep.labelings_checked == 8
    for rec in rep.records:
        assert rec["strong"]["gap_closed"] == 1 and rec["weak"]["gap_closed"] == 0
        assert rec["z_lp"] == F(13, 4) + gamma and rec["z_ip"] == 3


@pytest.mark.parametrize("gamma", GAMMAS)
def test_tree_size_shattering(gamma):
    cfg = ShatterConfig(gamma, ((-1, -1),) * 3)
    rep = verify_shattering(cfg, "tree")
    assert rep.verdict, rep.failures
    for rec in rep.records:
        assert rec["weak"]["tree_size"] == 3
        assert rec["strong"]["tree_size"] in (1, 3)
        assert rec["strong"]["lp_vertex"] is not None
    js = rep.to_json()
    assert js["records"][0]["strong"]["cut"] == "1*x1 + 1*x2 <= 3"


def test_padded_and_many_instances():
    cfg = ShatterConfig(F(1, 4), tuple((-(i % 3), -(i % 2)) for i in range(24)))
    rep = verify_shattering(cfg, Score.GAP_CLOSED, pad=(4, 6))
    assert rep.verdict and rep.labelings_checked == 0 and rep.notes


def test_tableau_lemma():
    rep = verify_tableau_lemma()
    assert rep.verdict, rep.failures
    rec = rep.records[0]
    assert rec["gap_distance"] == F(4, 5)
    assert rec["tree_sizes"] == [9, 1]
    assert [c["cut"] for c in rec["cuts"]] == [Cut((4, 7), 35), Cut((2, 3), 15)]
    assert "row 1" in rep.table()
