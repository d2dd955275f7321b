"""Gács–Körner common information by ergodic decomposition.

Everything here is combinatorial on the support pattern plus exact entropy
sums, so results are certified (no optimization involved).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .dist import (JointDist, JointDist2, JointDist3, SctError, ZERO_TOL,
                   cond_mutual_info_array, entropy)

MARKOV_TOL = 1e-9


class NotDoubleMarkov(SctError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ErgodicDecomposition:
    """Connected components of the support graph of p_XY.

    ``x_label[x]`` / ``y_label[y]`` give the component id of a symbol, or -1
    for symbols with zero marginal mass.  Component ids follow the smallest
    X index they contain.
    """

    components: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    x_label: np.ndarray
    y_label: np.ndarray
    q_star_pmf: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.components)

    def label_matrix(self) -> np.ndarray:
        """One-hot (|X|, n_components) matrix mapping X symbols to components."""
        m = np.zeros((len(self.x_label), self.n_components))
        rows = np.nonzero(self.x_label >= 0)[0]
        m[rows, self.x_label[rows]] = 1.0
        return m


def _pair_array(d) -> tuple[np.ndarray, float]:
    if isinstance(d, JointDist):
        if d.ndim != 2:
            raise ValueError("expected a bipartite distribution")
        return d.probs, d.zero_tol
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D array")
    return arr, ZERO_TOL


def decompose_support(support: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Component labels of a boolean bipartite support pattern.

    Returns (x_label, y_label, count); isolated symbols get -1.
    """
    nx, ny = support.shape
    xs, ys = np.nonzero(support)
    graph = coo_matrix((np.ones(len(xs)), (xs, nx + ys)), shape=(nx + ny, nx + ny))
    _, raw = connected_components(graph, directed=False)
    x_used = support.any(axis=1)
    y_used = support.any(axis=0)
    # renumber by smallest X index
    remap: dict[int, int] = {}
    for x in range(nx):
        if x_used[x] and raw[x] not in remap:
            remap[raw[x]] = len(remap)
    x_label = np.array([remap[raw[x]] if x_used[x] else -1 for x in range(nx)], dtype=int)
    y_label = np.array([remap[raw[nx + y]] if y_used[y] else -1 for y in range(ny)], dtype=int)
    return x_label, y_label, len(remap)


def ergodic_decomposition(d) -> ErgodicDecomposition:
    p, tol = _pair_array(d)
    x_label, y_label, k = decompose_support(p > tol)
    comps = tuple(
        (tuple(int(x) for x in np.nonzero(x_label == c)[0]),
         tuple(int(y) for y in np.nonzero(y_label == c)[0]))
        for c in range(k))
    px = p.sum(axis=1)
    mass = np.array([px[list(xs)].sum() for xs, _ in comps])
    mass = mass / mass.sum()
    x_label.setflags(write=False)
    y_label.setflags(write=False)
    mass.setflags(write=False)
    return ErgodicDecomposition(comps, x_label, y_label, mass)


def gk_ci(d) -> float:
    """C_GK(X;Y) = H(Q*), the entropy of the ergodic component masses."""
    return entropy(ergodic_decomposition(d).q_star_pmf)


def _xy_marginal(d: JointDist3) -> JointDist2:
    xy = d.probs.sum(axis=2)
    return JointDist2(xy / xy.sum(), zero_tol=d.zero_tol)


def _q_star_z(d: JointDist3, dec: ErgodicDecomposition) -> np.ndarray:
    """Joint pmf of (Q*, Z), Q* lifted through the X label."""
    pxz = d.probs.sum(axis=1)
    return dec.label_matrix().T @ pxz


def conditional_gk_ci(d: JointDist3) -> float:
    """H(Q*|Z) with Q* the maximal common variable of the (X,Y) marginal."""
    dec = ergodic_decomposition(_xy_marginal(d))
    qz = _q_star_z(d, dec)
    return max(entropy(qz) - entropy(qz.sum(axis=0)), 0.0)


def conditional_gk_ci_per_z(d: JointDist3) -> float:
    """Sum over z of p(z) H(Q*_z), decomposing each conditional p_{XY|z}.

    The common variable may depend on z here, so this is never smaller than
    :func:`conditional_gk_ci`.
    """
    pz = d.probs.sum(axis=(0, 1))
    total = 0.0
    for z in np.nonzero(pz > 0)[0]:
        block = d.probs[:, :, z] / pz[z]
        total += pz[z] * gk_ci(JointDist2(block / block.sum(), zero_tol=d.zero_tol / pz[z]))
    return float(total)


class Resolvability(NamedTuple):
    resolvable: bool
    conditionally_resolvable: bool
    residual: float
    conditional_residual: float


def resolvability_flags(d: JointDist3, tol: float = MARKOV_TOL) -> Resolvability:
    """Test I(X;Y|Q*) = 0 and I(X;Y|Z,Q*) = 0 against ``tol``."""
    dec = ergodic_decomposition(_xy_marginal(d))
    lab = dec.label_matrix()
    # joint (X, Y, Z, Q*) with Q* a function of X
    xyzq = d.probs[:, :, :, None] * lab[:, None, None, :]
    r = cond_mutual_info_array(xyzq, (0,), (1,), (3,))
    rc = cond_mutual_info_array(xyzq, (0,), (1,), (2, 3))
    return Resolvability(r <= tol, rc <= tol, r, rc)


@dataclass(frozen=True, eq=False)
class DoubleMarkovResult:
    """Output of :func:`double_markov_decompose`.

    ``joint`` has axes (X, Y, Q, Q').
    """

    joint: np.ndarray
    q_prime: ErgodicDecomposition
    i_xy_q: float
    i_xy_q_given_qprime: float
    h_qprime: float
    h_qprime_given_q: float
    precondition_residuals: tuple[float, float]

    @property
    def equality(self) -> bool:
        return self.h_qprime_given_q <= MARKOV_TOL


def double_markov_decompose(d_xyq: JointDist3, tol: float = MARKOV_TOL) -> DoubleMarkovResult:
    """Build the common label Q' for a triple with X-Y-Q and Y-X-Q.

    Q' is the ergodic component of (X, Y).  Raises :class:`NotDoubleMarkov`
    when either chain fails by more than ``tol`` or when a post condition on
    Q' does not hold.
    """
    p = d_xyq.probs
    r1 = cond_mutual_info_array(p, (0,), (2,), (1,))
    r2 = cond_mutual_info_array(p, (1,), (2,), (0,))
    if r1 > tol or r2 > tol:
        raise NotDoubleMarkov(f"I(X;Q|Y)={r1:.3g}, I(Y;Q|X)={r2:.3g} exceed {tol:g}")

    dec = ergodic_decomposition(_xy_marginal(d_xyq))
    lab = dec.label_matrix()
    joint = p[:, :, :, None] * lab[:, None, None, :]

    # H(Q'|X) = H(Q'|Y) = 0: every support pair shares its component id.
    supp = p.sum(axis=2) > d_xyq.zero_tol
    xs, ys = np.nonzero(supp)
    if np.any(dec.x_label[xs] != dec.y_label[ys]) or np.any(dec.x_label[xs] < 0):
        raise NotDoubleMarkov("component labels disagree on the support")

    i_cond = cond_mutual_info_array(joint, (0, 1), (2,), (3,))
    i_xy_q = cond_mutual_info_array(joint, (0, 1), (2,))
    h_qp = entropy(dec.q_star_pmf)
    qq = joint.sum(axis=(0, 1))
    h_qp_given_q = max(entropy(qq) - entropy(qq.sum(axis=1)), 0.0)
    if i_cond > tol:
        raise NotDoubleMarkov(f"I(XY;Q|Q')={i_cond:.3g} exceeds {tol:g}")
    if i_xy_q > h_qp + tol:
        raise NotDoubleMarkov(f"I(XY;Q)={i_xy_q:.6g} exceeds H(Q')={h_qp:.6g}")
    joint.setflags(write=False)
    return DoubleMarkovResult(joint, dec, i_xy_q, i_cond, h_qp, h_qp_given_q, (r1, r2))
