import numpy as np
import pytest
from hypothesis import given

from sct import catalog
from sct.dist import JointDist2, JointDist3, cond_mutual_info_array, entropy, mutual_information
from sct.gk import (NotDoubleMarkov, conditional_gk_ci, conditional_gk_ci_per_z,
                    double_markov_decompose, ergodic_decomposition, gk_ci, resolvability_flags)

from conftest import joint3, rand3


def xy(d):
    return JointDist2(d.probs.sum(axis=2))


def test_p3_components(cat):
    dec = ergodic_decomposition(xy(cat["p3"]))
    assert dec.components == (((0, 1), (0, 1)), ((2,), (2,)), ((3,), (3,)))
    assert np.allclose(dec.q_star_pmf, [0.5, 0.25, 0.25])


def test_full_support_single_component():
    assert ergodic_decomposition(JointDist2(np.full((3, 4), 1 / 12))).n_components == 1


def test_diagonal_components():
    dec = ergodic_decomposition(JointDist2(np.eye(5) / 5))
    assert dec.n_components == 5
    assert np.allclose(dec.q_star_pmf, 0.2)


def test_gk_values(cat):
    bsc = JointDist2(np.array([[0.45, 0.05], [0.05, 0.45]]))
    assert gk_ci(bsc) == 0.0
    assert gk_ci(JointDist2(np.eye(4) / 4)) == pytest.approx(2.0, abs=1e-12)
    assert gk_ci(xy(cat["p3"])) == pytest.approx(1.5, abs=1e-12)


@pytest.mark.parametrize("name,value", [("p1", 0.0), ("p2", 0.5), ("p3", 1.0), ("p5", 1.0)])
def test_conditional_gk_examples(cat, name, value):
    assert conditional_gk_ci(cat[name]) == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_conditional_gk_qn(n):
    assert conditional_gk_ci(catalog.get("qn", n)) == pytest.approx(1 / np.log2(n), abs=1e-9)


def test_per_z_values(cat):
    assert conditional_gk_ci_per_z(cat["p1"]) == pytest.approx(0.5, abs=1e-12)
    d = cat["p3"]
    flat = JointDist3(d.probs.sum(axis=2, keepdims=True))
    assert conditional_gk_ci_per_z(flat) == pytest.approx(gk_ci(xy(d)), abs=1e-12)
    bit = np.zeros((2, 2, 2)); bit[0, 0, 0] = bit[1, 1, 1] = 0.5
    assert conditional_gk_ci_per_z(JointDist3(bit)) == 0.0


@pytest.mark.parametrize("name,flags", [("p3", (True, False)), ("p4", (False, True)),
                                        ("p5", (False, False))])
def test_resolvability(cat, name, flags):
    r = resolvability_flags(cat[name])
    assert (r.resolvable, r.conditionally_resolvable) == flags


def test_double_markov_independent_q(cat):
    pxy = cat["p3"].probs.sum(axis=2)
    d = JointDist3(pxy[:, :, None] * np.array([0.3, 0.7]))
    r = double_markov_decompose(d)
    assert r.q_prime.n_components == 3
    assert r.i_xy_q_given_qprime <= 1e-12


def test_double_markov_q_star(cat):
    pxy = cat["p3"].probs.sum(axis=2)
    dec = ergodic_decomposition(JointDist2(pxy))
    d = JointDist3(pxy[:, :, None] * dec.label_matrix()[:, None, :])
    r = double_markov_decompose(d)
    assert r.equality
    assert r.i_xy_q == pytest.approx(r.h_qprime, abs=1e-12)


def test_double_markov_rejects():
    p = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            p[x, y, x] = 0.25
    with pytest.raises(NotDoubleMarkov):
        double_markov_decompose(JointDist3(p))


@given(joint3())
def test_conditioning_reduces_gk(d):
    assert conditional_gk_ci(d) <= gk_ci(xy(d)) + 1e-12
    assert conditional_gk_ci_per_z(d) >= conditional_gk_ci(d) - 1e-9


@given(joint3())
def test_mi_splits_on_q_star(d):
    dec = ergodic_decomposition(xy(d))
    j = d.probs.sum(axis=2)[:, :, None] * dec.label_matrix()[:, None, :]
    ixy = mutual_information(d, "x", "y")
    assert ixy == pytest.approx(entropy(dec.q_star_pmf) + cond_mutual_info_array(j, (0,), (1,), (2,)),
                                abs=1e-9)


@given(joint3())
def test_labels_constant_on_support(d):
    dec = ergodic_decomposition(xy(d))
    xs, ys = np.nonzero(d.probs.sum(axis=2) > d.zero_tol)
    assert np.array_equal(dec.x_label[xs], dec.y_label[ys])


def test_conditioning_reduces_gk_random():
    for s in range(200):
        d = rand3(s)
        assert conditional_gk_ci(d) <= gk_ci(xy(d)) + 1e-12
