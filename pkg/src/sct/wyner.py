"""Bipartite Wyner common information by column generation.

C_W(X;Y) = H(XY) - max sum_q w_q H(a_q (x) b_q) over decompositions
p_XY = sum_q w_q a_q b_q^T into product pmfs (the Markov chain X - Q - Y holds
exactly for every decomposition).  The restricted master problem over a pool
of product atoms is an LP; its duals price new atoms, which solves

    max_{a, b}  H(a) + H(b) - a^T L b,

in closed form over b and by grid search plus alternating ascent over a.
The master value is always achieved by an explicit feasible Q, so the
reported value is an upper bound; the pricing step gives a dual bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import highspy
import numpy as np

from .gk import decompose_support

GAP_TOL = 1e-7
MAX_ITER = 300
_STAB = 0.5
_TOP = 4
_MAX_ADD = 6
_REFINE = 40
_INF = highspy.kHighsInf


def _h_rows(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)
    return -t.sum(axis=-1)


def _softmin2(c: np.ndarray) -> np.ndarray:
    e = np.exp2(-(c - c.min(axis=-1, keepdims=True)))
    return e / e.sum(axis=-1, keepdims=True)


def _lse2(c: np.ndarray) -> np.ndarray:
    """log2 sum 2^-c along the last axis."""
    m = (-c).max(axis=-1)
    return m + np.log2(np.exp2(-c - m[..., None]).sum(axis=-1))


@lru_cache(maxsize=None)
def _simplex_grid(n: int) -> np.ndarray:
    steps = {1: 0, 2: 400, 3: 40, 4: 16, 5: 10}.get(n)
    if steps is None:
        rng = np.random.default_rng(n)
        pts = np.vstack([np.eye(n), np.full((1, n), 1.0 / n), rng.dirichlet(np.ones(n), 1500),
                         rng.dirichlet(np.full(n, 0.3), 1500)])
    elif n == 1:
        pts = np.ones((1, 1))
    else:
        rows = [c + (steps - sum(c),) for c in itertools.product(range(steps + 1), repeat=n - 1)
                if sum(c) <= steps]
        pts = np.array(rows, dtype=np.float64) / steps
    pts.setflags(write=False)
    return pts


def _refine(a: np.ndarray, lam: np.ndarray, iters: int):
    """Alternating ascent of H(a) + H(b) - a^T lam b from each row of ``a``."""
    for _ in range(iters):
        b = _softmin2(a @ lam)
        an = _softmin2(b @ lam.T)
        if np.abs(an - a).max() < 1e-13:
            a = an
            break
        a = an
    b = _softmin2(a @ lam)
    rc = _h_rows(a) + _h_rows(b) - np.einsum("mi,ij,mj->m", a, lam, b)
    return rc, a, b


def _clean(a: np.ndarray, b: np.ndarray, support: np.ndarray):
    """Zero tiny entries and resolve mass on cells outside the support."""
    a = np.where(a < 1e-12, 0.0, a)
    b = np.where(b < 1e-12, 0.0, b)
    while True:
        bad = np.outer(a > 0, b > 0) & ~support
        if not bad.any():
            break
        x, y = np.argwhere(bad)[0]
        if a[x] <= b[y]:
            a[x] = 0.0
        else:
            b[y] = 0.0
    if a.sum() <= 0 or b.sum() <= 0:
        return None
    return a / a.sum(), b / b.sum()


class _Master:
    """Restricted master LP: max h.w  s.t.  A w = p_support, w >= 0."""

    def __init__(self, rhs: np.ndarray):
        self.lp = highspy.Highs()
        self.lp.setOptionValue("output_flag", False)
        self.lp.setOptionValue("primal_feasibility_tolerance", 1e-10)
        self.lp.setOptionValue("dual_feasibility_tolerance", 1e-10)
        self.lp.changeObjectiveSense(highspy.ObjSense.kMaximize)
        m = len(rhs)
        empty = np.array([], dtype=np.int32)
        self.lp.addRows(m, rhs, rhs, 0, empty, empty, np.array([], dtype=np.float64))
        self.n = 0

    def add(self, column: np.ndarray, cost: float):
        idx = np.nonzero(column)[0].astype(np.int32)
        self.lp.addCol(float(cost), 0.0, _INF, len(idx), idx, column[idx])
        self.n += 1

    def solve(self):
        self.lp.run()
        sol = self.lp.getSolution()
        value = self.lp.getInfo().objective_function_value
        return value, np.array(sol.col_value), np.array(sol.row_dual)


@dataclass
class WynerSolution:
    """Optimal decomposition found for one (normalized) bipartite pmf.

    ``weights[q]``, ``atoms_x[q]``, ``atoms_y[q]`` give p(q), p(x|q), p(y|q).
    """

    value: float
    lower_bound: float
    markov_residual: float
    weights: np.ndarray
    atoms_x: np.ndarray
    atoms_y: np.ndarray
    iterations: int = 0
    dual: np.ndarray | None = None

    @property
    def gap(self) -> float:
        return max(self.value - self.lower_bound, 0.0)

    def q_channel(self, p: np.ndarray | None = None) -> np.ndarray:
        """p(q | x, y) as an (|X|*|Y|, |Q|) row-stochastic matrix."""
        joint = self.weights[None, None, :] * self.atoms_x.T[:, None, :] * self.atoms_y.T[None, :, :]
        tot = joint.sum(axis=2, keepdims=True)
        nq = len(self.weights)
        # rows outside the support are arbitrary; use the uniform pmf there
        with np.errstate(invalid="ignore", divide="ignore"):
            ch = np.where(tot > 0, joint / np.where(tot > 0, tot, 1.0), 1.0 / nq)
        return ch.reshape(-1, nq)


def _entropy(p: np.ndarray) -> float:
    return float(_h_rows(p.ravel()[None, :])[0])


def _solve_component(p: np.ndarray, tol: float, max_iter: int, init_atoms=()):
    """Column generation on one indecomposable block (already normalized)."""
    nx, ny = p.shape
    support = p > 0
    lam_full_shape = (nx, ny)
    rows = np.nonzero(support.ravel())[0]
    master = _Master(p.ravel()[rows])
    pool_a, pool_b = [], []

    def add(a, b):
        cleaned = _clean(a, b, support)
        if cleaned is None:
            return False
        a, b = cleaned
        master.add(np.outer(a, b).ravel()[rows], _entropy(a) + _entropy(b))
        pool_a.append(a)
        pool_b.append(b)
        return True

    px, py = p.sum(axis=1), p.sum(axis=0)
    if support.all():
        add(px, py)
    eye_x, eye_y = np.eye(nx), np.eye(ny)
    for x in range(nx):
        add(eye_x[x], p[x] / px[x])
    for y in range(ny):
        add(p[:, y] / py[y], eye_y[y])
    for x, y in np.argwhere(support):
        add(eye_x[x], eye_y[y])
    for a, b in init_atoms:
        if len(a) == nx and len(b) == ny:
            add(np.array(a, dtype=np.float64), np.array(b, dtype=np.float64))

    grid = _simplex_grid(nx)
    grid_h = _h_rows(grid)
    center = None
    best_ub = np.inf
    lp_val, w = -np.inf, None
    it = 0
    lam = np.zeros(lam_full_shape)
    for it in range(1, max_iter + 1):
        lp_val, w, dual = master.solve()
        lam = np.zeros(lam_full_shape)
        lam.ravel()[rows] = dual
        big = np.abs(dual).max() + 64.0
        lam.ravel()[np.nonzero(~support.ravel())[0]] = big
        lam_p = lam if center is None else _STAB * center + (1 - _STAB) * lam

        scores = grid_h + _lse2(grid @ lam_p)
        top = np.argsort(-scores)[:_TOP]
        active = [pool_a[j] for j in np.nonzero(w > 1e-12)[0]]
        starts = np.vstack([grid[top]] + ([np.array(active)] if active else []))
        rc, A, B = _refine(starts.copy(), lam_p, _REFINE)
        ub = float((lam_p * p).sum() + max(rc.max(), scores[top[0]]))
        if ub < best_ub:
            best_ub, center = ub, lam_p
        if best_ub - lp_val <= tol:
            break
        added = 0
        kept = []
        for i in np.argsort(-rc):
            if rc[i] <= 1e-12 or added >= _MAX_ADD:
                break
            if any(np.abs(A[i] - ka).max() + np.abs(B[i] - kb).max() < 1e-9 for ka, kb in kept):
                continue
            kept.append((A[i], B[i]))
            added += add(A[i].copy(), B[i].copy())
        if not added:
            if center is lam:
                break
            center = lam  # mispricing at the stabilized point
    h_p = _entropy(p)
    sel = np.nonzero(w > 1e-14)[0]
    weights = w[sel] / w[sel].sum()
    atoms_x = np.array([pool_a[j] for j in sel])
    atoms_y = np.array([pool_b[j] for j in sel])
    lower = max(h_p - best_ub, 0.0)
    lam = np.where(support, lam, 0.0)
    return weights, atoms_x, atoms_y, lower, it, lam


def _evaluate(p: np.ndarray, weights, atoms_x, atoms_y):
    """I(XY;Q) and I(X;Y|Q) at the decomposition, using p(q|x,y) on the support."""
    from .dist import cond_mutual_info_array

    joint = weights[None, None, :] * atoms_x.T[:, None, :] * atoms_y.T[None, :, :]
    tot = joint.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        ch = np.where(tot > 0, joint / np.where(tot > 0, tot, 1.0), 0.0)
    j = p[:, :, None] * ch
    value = cond_mutual_info_array(j, (0, 1), (2,))
    resid = cond_mutual_info_array(j, (0,), (1,), (2,))
    return value, resid


def solve(p, tol: float = GAP_TOL, max_iter: int = MAX_ITER, zero_tol: float = 1e-12,
          init_atoms=()) -> WynerSolution:
    """Wyner common information of a bipartite pmf (rows X, columns Y).

    The problem splits over ergodic components: the component label is a
    function of both X and Y, so every valid Q determines it and
    C_W = H(component) + sum_k p_k C_W(block_k).
    """
    p = np.asarray(p, dtype=np.float64)
    p = p / p.sum()
    p = np.where(p > zero_tol, p, 0.0)
    p = p / p.sum()
    nx, ny = p.shape
    x_label, y_label, k = decompose_support(p > 0)
    mass = np.array([p[x_label == c].sum() for c in range(k)])
    all_w, all_x, all_y = [], [], []
    dual = np.zeros_like(p)
    lower = _entropy(mass)
    iters = 0
    for c in range(k):
        xs = np.nonzero(x_label == c)[0]
        ys = np.nonzero(y_label == c)[0]
        block = p[np.ix_(xs, ys)] / mass[c]
        if len(xs) == 1 or len(ys) == 1 or _is_product(block):
            w = np.ones(1)
            ax = block.sum(axis=1)[None, :]
            ay = block.sum(axis=0)[None, :]
            lb = 0.0
            with np.errstate(divide="ignore"):
                lam = -np.log2(ax[0])[:, None] - np.log2(ay[0])[None, :]
            lam = np.where(block > 0, lam, 0.0)
        else:
            flip = len(xs) > len(ys)
            blk = block.T if flip else block
            init = []
            for a_, b_ in init_atoms:
                a_, b_ = np.asarray(a_)[xs], np.asarray(b_)[ys]
                if a_.sum() > 0.999 and b_.sum() > 0.999:
                    init.append((b_, a_) if flip else (a_, b_))
            w, ax, ay, lb, it, lam = _solve_component(blk, tol, max_iter, init)
            iters += it
            if flip:
                ax, ay, lam = ay, ax, lam.T
        dual[np.ix_(xs, ys)] = lam
        lower += mass[c] * lb
        full_x = np.zeros((len(w), nx))
        full_x[:, xs] = ax
        full_y = np.zeros((len(w), ny))
        full_y[:, ys] = ay
        all_w.append(mass[c] * w)
        all_x.append(full_x)
        all_y.append(full_y)
    weights = np.concatenate(all_w)
    atoms_x = np.vstack(all_x)
    atoms_y = np.vstack(all_y)
    value, resid = _evaluate(p, weights, atoms_x, atoms_y)
    dual.setflags(write=False)
    return WynerSolution(value=value, lower_bound=min(lower, value), markov_residual=resid,
                         weights=weights, atoms_x=atoms_x, atoms_y=atoms_y, iterations=iters,
                         dual=dual)


def _is_product(block: np.ndarray) -> bool:
    if not (block > 0).all():
        return False
    return bool(np.abs(block - np.outer(block.sum(axis=1), block.sum(axis=0))).max() <= 1e-15)


@lru_cache(maxsize=20000)
def _cached(shape, data: bytes, tol: float):
    p = np.frombuffer(data, dtype=np.float64).reshape(shape)
    return solve(p, tol=tol)


def solve_cached(p: np.ndarray, tol: float = GAP_TOL) -> WynerSolution:
    """:func:`solve` memoized on the exact bytes of the normalized input."""
    p = np.asarray(p, dtype=np.float64)
    p = np.where(p > 1e-12 * p.sum(), p, 0.0)
    p = np.ascontiguousarray(p / p.sum())
    return _cached(p.shape, p.tobytes(), tol)
