import numpy as np
import pytest

from sct import catalog
from sct.audit import (LopcMove, MoveKind, ProductTooLarge, additivity_check, apply_move,
                       audit_measure, backward_witness, find_eve_lo_violation, forward_witness,
                       random_move, value_at_channel)
from sct.dist import Channel, JointDist3, mutual_information
from sct.gk import conditional_gk_ci
from sct.measures import Quantity

from conftest import rand3


def test_eve_identity_unchanged(cat):
    d = cat["p5"]
    assert apply_move(d, LopcMove(MoveKind.EVE_LO, Channel.identity(2))) == d


def test_constant_announcement_is_isomorphic(cat):
    d = cat["p5"]
    after = apply_move(d, LopcMove.function(MoveKind.ALICE_PC, [0, 0, 0, 0], 1))
    assert after.sizes == d.sizes
    assert np.allclose(after.probs, d.probs)


def test_eve_merge_on_p1(cat):
    after = apply_move(cat["p1"], LopcMove.function(MoveKind.EVE_LO, [0, 0, 2, 3], 4))
    assert mutual_information(after, "x", "y", "z") == pytest.approx(0.0, abs=1e-12)


def test_pc_adjoins_to_both_other_parties(cat):
    d = cat["p1"]
    after = apply_move(d, LopcMove.function(MoveKind.ALICE_PC, [0, 1, 0, 1], 2))
    assert after.sizes == (4, 8, 8)
    p = after.probs.reshape(4, 4, 2, 4, 2)
    for x in range(4):
        assert p[x, :, 1 - x % 2].sum() == 0 and p[x, :, :, :, 1 - x % 2].sum() == 0
    assert np.allclose(p.sum(axis=(2, 4)), d.probs)


def test_pc_rejects_stochastic_payload():
    with pytest.raises(ValueError):
        LopcMove(MoveKind.BOB_PC, Channel(np.full((2, 2), 0.5)))


@pytest.mark.parametrize("kind", list(MoveKind))
def test_random_moves_valid(kind):
    d = rand3(0)
    for i in range(5):
        m = random_move(kind, d.sizes, np.random.default_rng(i))
        after = apply_move(d, m)
        assert after.probs.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("kind", list(MoveKind))
def test_witness_transport_preserves_value(kind):
    # a Z-preserving move keeps I(X;Y|Zbar) ordered at the transported channel
    d = rand3(1)
    w = Channel(np.random.default_rng(2).dirichlet(np.ones(3), size=3))
    m = random_move(kind, d.sizes, np.random.default_rng(3))
    fw = forward_witness(m, w)
    after = apply_move(d, m)
    before = value_at_channel("intrinsic", d, w)
    if fw is not None:
        assert value_at_channel("intrinsic", after, fw) <= before + 1e-12
    if kind is MoveKind.EVE_LO:
        w2 = Channel.identity(3)
        back = backward_witness(m, w2)
        assert value_at_channel("intrinsic", d, back) == pytest.approx(
            value_at_channel("intrinsic", after, w2), abs=1e-12)


def test_intrinsic_secret_bit_alice_lo(cat):
    rep = audit_measure("intrinsic", cat["psecret"], trials=12, kinds=["alice_lo"])
    assert all(t.value_after <= 1.0 + 1e-3 for t in rep.trials)
    assert rep.violation_count == 0


def test_gk_cond_eve_announces_z(cat):
    move = LopcMove.function(MoveKind.EVE_PC, [0, 1], 2)
    rep = audit_measure("gk_cond", cat["p3"], trials=0)
    assert rep.trials == []
    after = apply_move(cat["p3"], move)
    assert conditional_gk_ci(after) >= 1.0 - 1e-9


def test_gk_cond_audit_random():
    rep = audit_measure("gk_cond", rand3(5), trials=120, seed=1)
    assert rep.violation_count == 0


def test_intrinsic_audit_random():
    rep = audit_measure("intrinsic", rand3(6), trials=24, seed=2, restarts=8)
    assert rep.violation_count == 0


def _path():
    p = np.zeros((3, 2, 1))
    p[0, 0, 0] = p[1, 0, 0] = p[1, 1, 0] = p[2, 1, 0] = 0.25
    return JointDist3(p)


def test_gk_cond_not_monotone_under_announcement():
    # Alice announces whether X is the middle vertex of a path-shaped support;
    # the announcement splits the single component into two.
    d = _path()
    after = apply_move(d, LopcMove.function(MoveKind.ALICE_PC, [0, 1, 0], 2))
    assert conditional_gk_ci(d) == 0.0
    assert conditional_gk_ci(after) == pytest.approx(0.5, abs=1e-12)


def test_gk_marginal_not_monotone_under_announcement():
    rep = audit_measure("gk", _path(), trials=30, kinds=["alice_pc"])
    assert rep.violation_count > 0


def test_eve_merge_violates_conditional_wyner(cat):
    found, inst = find_eve_lo_violation("wyner_cond", cat["p1"], budget=256)
    assert found
    assert inst.gap >= 0.497
    assert inst.value_before == pytest.approx(0.5, abs=1e-3)
    assert inst.value_after == pytest.approx(0.0, abs=1e-3)


def test_no_violation_intrinsic_search():
    found, _ = find_eve_lo_violation("intrinsic", budget=30, n_dists=3, restarts=8)
    assert not found


def test_additivity_gk_cond_secret_bits(cat):
    r = additivity_check("gk_cond", cat["psecret"], cat["psecret"], tol=1e-9)
    assert r.passed and r.lhs == pytest.approx(2.0) and r.rhs == pytest.approx(2.0)


def test_additivity_intrinsic_pair():
    r = additivity_check("intrinsic", rand3(1, (2, 2, 2)), rand3(2, (2, 2, 2)), restarts=16)
    assert r.passed


def test_additivity_wyner_intrinsic_with_independent(cat):
    ind = JointDist3(np.einsum("i,j,k->ijk", [0.3, 0.7], [0.6, 0.4], [0.5, 0.5]))
    r = additivity_check("wyner_intrinsic", cat["psecret"], ind)
    assert r.lhs == pytest.approx(1.0, abs=1e-3)
    assert r.passed


def test_additivity_size_limit():
    with pytest.raises(ProductTooLarge):
        additivity_check("gk_cond", catalog.get("pn", 6), catalog.get("pn", 6))


def test_quantity_exactness():
    assert Quantity("gk_cond").exact and not Quantity("intrinsic").exact
