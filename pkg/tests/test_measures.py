import numpy as np
import pytest

from sct import catalog, wyner
from sct.dist import JointDist3, cond_mutual_info_array, entropy
from sct.gk import conditional_gk_ci
from sct.measures import (Quantity, _wyner_outer_objective, bounds_report, component_residual,
                          compute, intrinsic_information, theorem3_certificate, wyner_ci,
                          wyner_ci_cond, wyner_intrinsic_ci)

from conftest import rand3


def h2(a):
    return -a * np.log2(a) - (1 - a) * np.log2(1 - a)


def pair(m):
    m = np.asarray(m, dtype=float)
    return JointDist3((m / m.sum())[:, :, None])


BIT = pair([[1, 0], [0, 1]])
INDEPENDENT = pair([[0.12, 0.28], [0.18, 0.42]])


def test_wyner_sanity(cat):
    assert wyner_ci(INDEPENDENT).value <= 1e-6
    assert wyner_ci(BIT).value == pytest.approx(1.0, abs=1e-4)
    p3 = pair(cat["p3"].probs.sum(axis=2))
    assert wyner_ci(p3).value == pytest.approx(1.5, abs=1e-3)


@pytest.mark.parametrize("a", [0.05, 0.1, 0.25])
def test_wyner_dsbs_closed_form(a):
    a1 = (1 - np.sqrt(1 - 2 * a)) / 2
    exact = 1 + h2(a) - 2 * h2(a1)
    r = wyner_ci(pair([[1 - a, a], [a, 1 - a]]))
    assert r.value == pytest.approx(exact, abs=1e-5)
    assert r.residuals["markov"] <= 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_wyner_bracketed(seed):
    p = rand3(seed).probs.sum(axis=2)
    sol = wyner.solve(p)
    ixy = cond_mutual_info_array(p, (0,), (1,))
    assert ixy - 1e-9 <= sol.lower_bound <= sol.value + 1e-12
    assert sol.gap <= 1e-6
    assert sol.value <= min(entropy(p.sum(axis=1)), entropy(p.sum(axis=0))) + 1e-9


def test_wyner_witness_is_markov():
    p = rand3(11).probs.sum(axis=2)
    sol = wyner.solve(p)
    q = sol.q_channel().reshape(3, 3, -1)
    j = p[:, :, None] * q
    assert cond_mutual_info_array(j, (0,), (1,), (2,)) <= 1e-7
    assert cond_mutual_info_array(j, (0, 1), (2,)) == pytest.approx(sol.value, abs=1e-7)


def test_wyner_cond_values(cat):
    assert wyner_ci_cond(cat["p1"]).value == pytest.approx(0.5, abs=1e-3)
    diag = np.zeros((2, 2, 4))
    for x in range(2):
        for y in range(2):
            diag[x, y, 2 * x + y] = 0.25
    assert wyner_ci_cond(JointDist3(diag)).value <= 1e-6
    d = rand3(2)
    flat = JointDist3(d.probs.sum(axis=2, keepdims=True))
    assert wyner_ci_cond(flat).value == pytest.approx(wyner_ci(flat).value, abs=1e-9)


def test_wyner_cond_penalty_cross_check():
    d = rand3(4, (2, 2, 2))
    cg = wyner_ci_cond(d).value
    pen = wyner_ci_cond(d, method="penalty", restarts=8)
    # the penalty route is an upper bound when feasible
    assert pen.residuals["markov"] <= 1e-5
    assert pen.value >= cg - 1e-3
    assert pen.value == pytest.approx(cg, abs=5e-3)


def test_intrinsic_values(cat):
    assert intrinsic_information(cat["psecret"]).value == pytest.approx(1.0, abs=1e-6)
    r = intrinsic_information(cat["p1"])
    assert r.value == pytest.approx(0.0, abs=1e-6)
    assert r.channel.in_size == 4


def test_intrinsic_bounds_on_random():
    for s in range(5):
        d = rand3(20 + s)
        v = intrinsic_information(d, restarts=8).value
        assert -1e-12 <= v <= cond_mutual_info_array(d.probs, (0,), (1,), (2,)) + 1e-12
        assert v <= cond_mutual_info_array(d.probs, (0,), (1,)) + 1e-12


def test_wyner_intrinsic_values(cat):
    assert wyner_intrinsic_ci(cat["psecret"]).value == pytest.approx(1.0, abs=1e-4)
    assert wyner_intrinsic_ci(cat["p1"]).value == pytest.approx(0.0, abs=1e-4)
    ind = np.einsum("i,j,k->ijk", [0.3, 0.7], [0.6, 0.4], [0.5, 0.2, 0.3])
    assert wyner_intrinsic_ci(JointDist3(ind)).value <= 1e-6


def test_wyner_intrinsic_between_bounds():
    d = rand3(7, (2, 2, 2))
    ii = intrinsic_information(d)
    cw = wyner_intrinsic_ci(d, intrinsic=ii)
    assert cw.value >= ii.value - 1e-3
    assert cw.value <= wyner_ci_cond(d).value + 1e-9


def test_envelope_gradient_directional():
    p = rand3(8, (2, 2, 3)).probs
    f = _wyner_outer_objective(p, 1e-10)
    rng = np.random.default_rng(0)
    w = rng.dirichlet(np.ones(3), size=3)
    d = rng.normal(size=w.shape)
    d -= d.mean(axis=1, keepdims=True)
    _, (g,) = f([w])
    h = 1e-4
    fd = (f([w + h * d])[0] - f([w - h * d])[0]) / (2 * h)
    assert fd == pytest.approx(float((g * d).sum()), rel=1e-2, abs=1e-4)


def test_certificate_examples(cat):
    c = theorem3_certificate(cat["p1"])
    assert c.q_prime_exists and c.equality_holds and abs(c.gap) <= 1e-3
    c = theorem3_certificate(cat["psecret"])
    assert c.q_prime_exists and c.equality_holds


def test_component_residual_product_blocks(cat):
    merged = cat["p1"].probs.copy()
    merged[:, :, 0] += merged[:, :, 1]
    merged[:, :, 1] = 0
    assert component_residual(merged) <= 1e-12
    assert component_residual(rand3(0).probs) > 1e-3


def test_bounds_report_p3(cat):
    r = bounds_report(cat["p3"], restarts=8)
    assert r.gk == pytest.approx(1.5, abs=1e-9)
    assert r.mutual_information == pytest.approx(1.5, abs=1e-9)
    assert r.wyner == pytest.approx(1.5, abs=1e-3)
    assert r.gk <= r.mutual_information <= r.wyner + 1e-3


def test_bounds_report_q4():
    r = bounds_report(catalog.get("qn", 4), restarts=8)
    assert r.sk_rate_upper == pytest.approx(1.0, abs=1e-3)
    assert r.zero_comm_rate_conjectured == pytest.approx(0.5, abs=1e-9)
    assert r.zero_comm_rate_conjectured <= r.sk_rate_upper + 1e-9


def test_bounds_report_secret_bit(cat):
    r = bounds_report(cat["psecret"], restarts=8)
    for v in (r.gk_cond, r.intrinsic, r.wyner_intrinsic, r.rate_bound):
        assert v == pytest.approx(1.0, abs=1e-4)


def test_compute_dispatch(cat):
    r = compute("gk_cond", cat["p3"])
    assert r.certified_exact and r.value == pytest.approx(1.0)
    assert not compute("wyner", cat["p3"]).certified_exact
    assert set(Quantity) >= {Quantity.SK_COST}
    assert conditional_gk_ci(cat["p3"]) == compute(Quantity.GK_COND, cat["p3"]).value


@pytest.mark.parametrize("name", ["p1", "p2", "p3", "p4", "p5", "psecret"])
def test_certificate_consistent_on_catalog(name):
    c = theorem3_certificate(catalog.get(name))
    assert c.consistent
