"""Secrecy and common-information measures of a tripartite pmf.

Combinatorial quantities (gk, gk_cond) are exact.  Everything that needs an
optimization is reported as an upper bound on the true minimum: the value is
always the objective at an explicit feasible point (a channel for Eve and,
for the Wyner quantities, a conditional pmf of Q).

Outer minimizations over Eve's channel p(zbar|z) combine

* exact search over deterministic channels.  I(X;Y|Zbar) and C_W(X;Y|Zbar)
  are both sums over the output symbols of (mass x value of the merged
  block), so a deterministic channel only matters through the partition of
  Z it induces and the best partition is found by dynamic programming over
  subsets;
* multi-start projected gradient descent over stochastic channels;
* optional caller supplied candidate channels.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import gk, wyner
from .dist import (Channel, JointDist, JointDist2, JointDist3, cond_mutual_info_array,
                   mutual_information)
from .objectives import (intrinsic_objective, joint_intrinsic_wyner_objectives,
                         wyner_objectives)
from .optim import (DEFAULT_RESTARTS, ENUMERATION_CAP, FEASIBILITY_TOL, SimplexProductSpec,
                    local_descent, minimize, minimize_with_penalty)

OUTER_RESTARTS = 1
OUTER_STEPS = 15
INNER_TOL = 1e-10
INNER_ITER = 500
OUTER_MIN_STEP = 1e-3
EQUALITY_TOL = 1e-3
RESIDUAL_TOL = 1e-9


class Quantity(str, enum.Enum):
    GK = "gk"
    GK_COND = "gk_cond"
    GK_COND_PER_Z = "gk_cond_perz"
    WYNER = "wyner"
    WYNER_COND = "wyner_cond"
    INTRINSIC = "intrinsic"
    WYNER_INTRINSIC = "wyner_intrinsic"
    SK_COST = "sk_cost"

    @property
    def exact(self) -> bool:
        return self in (Quantity.GK, Quantity.GK_COND, Quantity.GK_COND_PER_Z)


@dataclass(frozen=True, eq=False)
class MeasureResult:
    """Value of one quantity plus the point that achieves it.

    ``witness`` may hold ``channel`` (p(zbar|z) as a :class:`Channel`) and
    ``q`` (p(q|x,y,zbar) as an array of shape (|X|, |Y|, |Zbar|, |Q|)).
    ``residuals`` holds diagnostics such as the Markov residual of the Q
    witness and the certified lower bound of the inner solver.
    """

    quantity: Quantity
    value: float
    certified_exact: bool
    witness: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def channel(self) -> Channel | None:
        return self.witness.get("channel")


def _probs3(d) -> np.ndarray:
    if isinstance(d, JointDist):
        p = d.probs
    else:
        p = np.asarray(d, dtype=np.float64)
    if p.ndim == 2:
        p = p[:, :, None]
    if p.ndim != 3:
        raise ValueError("expected a tripartite distribution")
    return p


def _probs2(d) -> np.ndarray:
    p = d.probs if isinstance(d, JointDist) else np.asarray(d, dtype=np.float64)
    if p.ndim == 3:
        p = p.sum(axis=2)
    if p.ndim != 2:
        raise ValueError("expected a bipartite distribution")
    return p


def degrade(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """p(x, y, zbar) = sum_z p(x, y, z) w[z, zbar]."""
    return np.tensordot(p, w, axes=([2], [0]))


# ---------------------------------------------------------------- exact ones

def gk_result(d) -> MeasureResult:
    p = _probs2(d)
    return MeasureResult(Quantity.GK, gk.gk_ci(JointDist2(p / p.sum())), True)


def gk_cond_result(d) -> MeasureResult:
    return MeasureResult(Quantity.GK_COND, gk.conditional_gk_ci(_as3(d)), True)


def gk_cond_per_z_result(d) -> MeasureResult:
    return MeasureResult(Quantity.GK_COND_PER_Z, gk.conditional_gk_ci_per_z(_as3(d)), True)


def _as3(d) -> JointDist3:
    if isinstance(d, JointDist3):
        return d
    p = _probs3(d)
    return JointDist3(p / p.sum())


# ------------------------------------------------------------------- Wyner

def _q_array(sol: wyner.WynerSolution, nx: int, ny: int) -> np.ndarray:
    return sol.q_channel(None).reshape(nx, ny, -1)


def wyner_ci(d, tol: float = wyner.GAP_TOL) -> MeasureResult:
    """C_W(X;Y) = min I(XY;Q) over X - Q - Y, by column generation."""
    p = _probs2(d)
    nx, ny = p.shape
    if nx == 1 or ny == 1:
        q = np.ones((nx, ny, 1, 1))
        return MeasureResult(Quantity.WYNER, 0.0, False, {"q": q},
                             {"markov": 0.0, "lower_bound": 0.0})
    sol = wyner.solve_cached(p, tol)
    q = _q_array(sol, nx, ny)[:, :, None, :]
    return MeasureResult(Quantity.WYNER, sol.value, False, {"q": q},
                         {"markov": sol.markov_residual, "lower_bound": sol.lower_bound})


def _cond_wyner(p: np.ndarray, tol: float):
    """Sum over z of p(z) C_W(P_XY|z); returns (value, lower, markov, q array)."""
    nx, ny, nz = p.shape
    pz = p.sum(axis=(0, 1))
    sols = []
    value = lower = markov = 0.0
    for z in range(nz):
        if pz[z] <= 0:
            sols.append(None)
            continue
        sol = wyner.solve_cached(p[:, :, z], tol)
        sols.append(sol)
        value += pz[z] * sol.value
        lower += pz[z] * sol.lower_bound
        markov += pz[z] * sol.markov_residual
    nq = max([len(s.weights) for s in sols if s is not None] + [1])
    q = np.zeros((nx, ny, nz, nq))
    q[:, :, :, 0] = 1.0
    for z, sol in enumerate(sols):
        if sol is not None:
            q[:, :, z, :] = 0.0
            q[:, :, z, :len(sol.weights)] = _q_array(sol, nx, ny)
    return value, lower, markov, q


def wyner_ci_cond(d, tol: float = wyner.GAP_TOL, method: str = "cg",
                  restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> MeasureResult:
    """C_W(X;Y|Z) = min I(XY;Q|Z) over X - QZ - Y.

    The program separates over z, so the default method solves one bipartite
    problem per z.  ``method="penalty"`` runs the generic penalty program
    over p(q|x,y,z) instead, as an independent cross-check.
    """
    p = _probs3(d)
    nx, ny, nz = p.shape
    if nx == 1 or ny == 1:
        return MeasureResult(Quantity.WYNER_COND, 0.0, False, {"q": np.ones((nx, ny, nz, 1))},
                             {"markov": 0.0, "lower_bound": 0.0})
    if method == "penalty":
        obj, con = wyner_objectives(p)
        spec = SimplexProductSpec(((nx * ny * nz, nx * ny),))
        res = minimize_with_penalty(spec, obj, con, restarts=restarts, seed=seed)
        q = res.params[0].reshape(nx, ny, nz, -1)
        return MeasureResult(Quantity.WYNER_COND, res.value, False, {"q": q},
                             {"markov": res.feasibility_residual, "converged": res.converged,
                              "restarts_used": res.restarts_used})
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")
    value, lower, markov, q = _cond_wyner(p, tol)
    return MeasureResult(Quantity.WYNER_COND, value, False, {"q": q},
                         {"markov": markov, "lower_bound": lower})


# ------------------------------------------------------ outer channel search

def _used(p: np.ndarray):
    pz = p.sum(axis=(0, 1))
    keep = np.nonzero(pz > 0)[0]
    return p[:, :, keep], keep


def _subset_table(p: np.ndarray, block_value) -> np.ndarray:
    """mass(S) * block_value(P_XY|Z in S) for every non-empty subset S."""
    n = p.shape[2]
    f = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        block = p[:, :, idx].sum(axis=2)
        m = block.sum()
        f[mask] = m * block_value(block / m) if m > 0 else 0.0
    return f


def _best_partition(f: np.ndarray, n: int):
    """Minimum of sum f(S) over set partitions of range(n) by subset DP."""
    full = (1 << n) - 1
    best = np.full(1 << n, np.inf)
    choice = np.zeros(1 << n, dtype=np.int64)
    best[0] = 0.0
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            s = sub | low
            v = f[s] + best[mask ^ s]
            if v < best[mask] - 1e-15:
                best[mask], choice[mask] = v, s
            if sub == 0:
                break
            sub = (sub - 1) & rest
    labels = np.zeros(n, dtype=int)
    mask, k = full, 0
    while mask:
        s = choice[mask]
        for i in range(n):
            if s >> i & 1:
                labels[i] = k
        k += 1
        mask ^= s
    return float(best[full]), labels


def _partition_channel(labels, n_out: int) -> np.ndarray:
    w = np.zeros((len(labels), n_out))
    w[np.arange(len(labels)), labels] = 1.0
    return w


def _full_channel(w_used: np.ndarray, keep: np.ndarray, nz: int, n_out: int) -> Channel:
    """Lift a channel on the used Z symbols to all of Z (unused rows go to 0)."""
    w = np.zeros((nz, n_out))
    w[:, 0] = 1.0
    k = min(w_used.shape[1], n_out)
    w[keep] = 0.0
    w[np.ix_(keep, np.arange(k))] = w_used[:, :k]
    # clean ulps so rows stay exactly stochastic
    w = np.maximum(w, 0.0)
    return Channel(w / w.sum(axis=1, keepdims=True))


def _candidate_rows(candidates, keep, nz):
    out = []
    for ch in candidates or ():
        m = ch.matrix if isinstance(ch, Channel) else np.asarray(ch, dtype=np.float64)
        if m.shape[0] == nz:
            out.append(np.array(m[keep], dtype=np.float64))
    return out


def _can_enumerate(n: int, cap: int) -> bool:
    return n ** n <= cap


def _intrinsic_value(p_used: np.ndarray, w: np.ndarray) -> float:
    return cond_mutual_info_array(degrade(p_used, w), (0,), (1,), (2,))


def intrinsic_information(d, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                          tol: float = INNER_TOL, candidates=(), cap: int = ENUMERATION_CAP,
                          method: str = "pgd", max_iter: int = INNER_ITER) -> MeasureResult:
    """I(X;Y|Z down) = min I(X;Y|Zbar) over channels Z -> Zbar, |Zbar| <= |Z|."""
    p = _probs3(d)
    nx, ny, nz = p.shape
    if nx == 1 or ny == 1:
        return MeasureResult(Quantity.INTRINSIC, 0.0, False, {"channel": Channel.identity(nz)},
                             {"source": "degenerate"})
    p_used, keep = _used(p)
    n = len(keep)
    best_val, best_w, source = np.inf, None, None

    def offer(v, w, src):
        nonlocal best_val, best_w, source
        if v < best_val - 1e-12:
            best_val, best_w, source = v, w, src

    offer(_intrinsic_value(p_used, np.eye(n)), np.eye(n), "identity")
    enumerated = _can_enumerate(n, cap)
    if enumerated:
        def block_mi(b):
            return cond_mutual_info_array(b, (0,), (1,))
        v, labels = _best_partition(_subset_table(p_used, block_mi), n)
        w = _partition_channel(labels, n)
        offer(_intrinsic_value(p_used, w), w, "enumeration")
    cands = _candidate_rows(candidates, keep, nz)
    for w in cands:
        offer(_intrinsic_value(p_used, w), w, "candidate")
    starts = [[best_w]] + [[w] for w in cands if w.shape[1] == n]
    if restarts > 0 or len(starts) > 0:
        res = minimize(SimplexProductSpec(((n, n),)), intrinsic_objective(p_used),
                       restarts=restarts, seed=seed, tol=tol, method=method, starts=starts,
                       max_iter=max_iter)
        w = res.params[0]
        offer(_intrinsic_value(p_used, w), w, "continuous")
    channel = _full_channel(best_w, keep, nz, max(nz, best_w.shape[1]))
    return MeasureResult(Quantity.INTRINSIC, max(best_val, 0.0), False, {"channel": channel},
                         {"source": source, "enumerated": enumerated,
                          "restarts_used": restarts + len(starts)})


def _wyner_outer_objective(p_used: np.ndarray, tol: float):
    """Value and envelope gradient of C_W(X;Y|Zbar) in the channel w[z, zbar].

    For each zbar with unnormalized block M and mass s,
    s C_W(M/s) = -sum M log2(M/s) - <L, M>, L the optimal dual of the inner LP,
    so the gradient in M is -log2(M/s) - L on the support of M.
    """
    def f(blocks):
        (w,) = blocks
        m = degrade(p_used, w)
        grad_m = np.zeros_like(m)
        val = 0.0
        for zb in range(m.shape[2]):
            blk = m[:, :, zb]
            s = blk.sum()
            if s <= 1e-15:
                continue
            sol = wyner.solve_cached(blk, tol)
            val += s * sol.value
            pos = blk > 1e-12 * s
            with np.errstate(divide="ignore", invalid="ignore"):
                grad_m[:, :, zb] = np.where(pos, -np.log2(np.where(pos, blk / s, 1.0)) - sol.dual,
                                            0.0)
        return val, [np.tensordot(p_used, grad_m, axes=([0, 1], [0, 1]))]

    return f


def _cw_at(p_used: np.ndarray, w: np.ndarray, tol: float) -> float:
    return _cond_wyner(degrade(p_used, w), tol)[0]


def wyner_intrinsic_ci(d, restarts: int = OUTER_RESTARTS, seed: int = 0,
                       tol: float = wyner.GAP_TOL, candidates=(), cap: int = ENUMERATION_CAP,
                       method: str = "alternating", include_intrinsic: bool = True,
                       polish: bool = True,
                       intrinsic: MeasureResult | None = None,
                       quantity: Quantity = Quantity.WYNER_INTRINSIC) -> MeasureResult:
    """C_W(X;Y|Z down) = min C_W(X;Y|Zbar) over channels Z -> Zbar.

    The inner conditional Wyner problem is solved to a certified gap for
    every channel visited; the outer search uses the deterministic partition
    DP, the identity, the intrinsic-information witness, caller candidates
    and ``restarts`` random starts of a descent driven by LP duals (plus one
    descent from the best discrete candidate when ``polish`` is set).  With
    ``method="joint"`` the channel and p(q|x,y,zbar) are optimized together
    by the penalty program instead (cross-check).
    """
    p = _probs3(d)
    nx, ny, nz = p.shape
    if nx == 1 or ny == 1:
        return MeasureResult(quantity, 0.0, False, {"channel": Channel.identity(nz)},
                             {"source": "degenerate"})
    p_used, keep = _used(p)
    n = len(keep)
    if method == "joint":
        return _wyner_intrinsic_joint(p, p_used, keep, restarts, seed, quantity)
    if method != "alternating":
        raise ValueError(f"unknown method {method!r}")

    best_val, best_w, source = np.inf, None, None

    def offer(w, src):
        nonlocal best_val, best_w, source
        v = _cw_at(p_used, w, tol)
        if v < best_val - 1e-12:
            best_val, best_w, source = v, w, src

    offer(np.eye(n), "identity")
    enumerated = _can_enumerate(n, cap)
    if enumerated and n > 1:
        def block_cw(b):
            return wyner.solve_cached(b, tol).value
        _, labels = _best_partition(_subset_table(p_used, block_cw), n)
        offer(_partition_channel(labels, n), "enumeration")
    if include_intrinsic:
        if intrinsic is None:
            intrinsic = intrinsic_information(p, seed=seed, cap=cap)
        offer(np.array(intrinsic.channel.matrix[keep]), "intrinsic")
    cands = _candidate_rows(candidates, keep, nz)
    for w in cands:
        offer(w, "candidate")
    # C_W(X;Y|Zbar) >= I(X;Y|Zbar) >= I(X;Y|Z down): nothing left to gain
    floor = intrinsic.value + 1e-9 if intrinsic is not None else -np.inf
    if n > 1 and best_val > floor:
        objective = _wyner_outer_objective(p_used, tol)
        spec = SimplexProductSpec(((n, n),))
        starts = [best_w] if polish and best_w.shape[1] == n else []
        starts += [spec.sample(np.random.default_rng([seed, i]))[0] for i in range(restarts)]
        for w0 in starts:
            w, _ = local_descent(objective, [w0], max_iter=OUTER_STEPS, tol=1e-9,
                                  min_step=OUTER_MIN_STEP)
            offer(w[0], "continuous")
            if best_val <= floor:
                break
    value, lower, markov, q = _cond_wyner(degrade(p_used, best_w), tol)
    channel = _full_channel(best_w, keep, nz, max(nz, best_w.shape[1]))
    return MeasureResult(quantity, max(value, 0.0), False, {"channel": channel, "q": q},
                         {"source": source, "enumerated": enumerated, "markov": markov,
                          "inner_lower_bound": lower})


def _wyner_intrinsic_joint(p, p_used, keep, restarts, seed, quantity):
    nx, ny, nz = p.shape
    n = len(keep)
    obj, con = joint_intrinsic_wyner_objectives(p_used, n)
    spec = SimplexProductSpec(((n, n), (nx * ny * n, nx * ny)))
    res = minimize_with_penalty(spec, obj, con, restarts=restarts, seed=seed,
                                tol=FEASIBILITY_TOL)
    w, v = res.params
    channel = _full_channel(w, keep, nz, nz)
    return MeasureResult(quantity, res.value, False,
                         {"channel": channel, "q": v.reshape(nx, ny, n, -1)},
                         {"source": "joint", "markov": res.feasibility_residual,
                          "converged": res.converged})


def sk_cost(d, **kw) -> MeasureResult:
    """Secret-key cost of formation with unlimited public communication."""
    return wyner_intrinsic_ci(d, quantity=Quantity.SK_COST, **kw)


# --------------------------------------------------------------- certificate

@dataclass(frozen=True, eq=False)
class Theorem3Certificate:
    """Test of C_W(X;Y|Z down) = I(X;Y|Z down) through a common label Q'.

    At the optimal channel, Q' exists iff every conditional p_XY|zbar is a
    product inside each of its ergodic components (then Q' is the component
    label and X - Zbar Q' - Y holds).
    """

    optimal_channel: Channel
    q_prime_exists: bool
    per_zbar_residual: float
    equality_holds: bool
    gap: float
    wyner_intrinsic: float
    intrinsic: float

    @property
    def consistent(self) -> bool:
        return self.q_prime_exists == self.equality_holds


def component_residual(p_xyz: np.ndarray) -> float:
    """max over zbar and ergodic components of I(X;Y | zbar, component)."""
    worst = 0.0
    pz = p_xyz.sum(axis=(0, 1))
    for z in np.nonzero(pz > 0)[0]:
        blk = p_xyz[:, :, z] / pz[z]
        blk = np.where(blk > 1e-12, blk, 0.0)
        x_label, y_label, k = gk.decompose_support(blk > 0)
        for c in range(k):
            sub = blk[np.ix_(x_label == c, y_label == c)]
            worst = max(worst, cond_mutual_info_array(sub / sub.sum(), (0,), (1,)))
    return worst


def theorem3_certificate(d, restarts: int = DEFAULT_RESTARTS, outer_restarts: int = OUTER_RESTARTS,
                         seed: int = 0, cw: MeasureResult | None = None,
                         ii: MeasureResult | None = None) -> Theorem3Certificate:
    p = _probs3(d)
    if ii is None:
        ii = intrinsic_information(p, restarts=restarts, seed=seed)
    if cw is None:
        cw = wyner_intrinsic_ci(p, restarts=outer_restarts, seed=seed, intrinsic=ii)
    w = cw.channel
    resid = component_residual(degrade(p, w.matrix))
    gap = cw.value - ii.value
    return Theorem3Certificate(optimal_channel=w, q_prime_exists=resid <= RESIDUAL_TOL,
                               per_zbar_residual=resid, equality_holds=abs(gap) <= EQUALITY_TOL,
                               gap=gap, wyner_intrinsic=cw.value, intrinsic=ii.value)


# -------------------------------------------------------------- bound report

def _perfect_bit() -> np.ndarray:
    p = np.zeros((2, 2, 1))
    p[0, 0, 0] = p[1, 1, 0] = 0.5
    return p


@dataclass(frozen=True)
class BoundsReport:
    """Marginal chain, conditional quantities and the rate bounds they imply.

    ``rate_bound`` is min over the two monotones M in {I down, C_W down} of
    M(p)/M(target), an upper bound on the LOPC conversion rate p -> target.
    """

    gk: float
    mutual_information: float
    wyner: float
    gk_cond: float
    cond_mutual_information: float
    intrinsic: float
    wyner_intrinsic: float
    sk_rate_upper: float
    sk_cost_lower: float
    sk_cost: float
    zero_comm_rate_conjectured: float
    rate_bound: float

    def items(self):
        return [(k, getattr(self, k)) for k in self.__dataclass_fields__]


def _ratio(a: float, b: float) -> float:
    if b <= 1e-12:
        return np.inf if a > 1e-12 else np.nan
    return a / b


def bounds_report(d, target=None, restarts: int = DEFAULT_RESTARTS,
                  outer_restarts: int = OUTER_RESTARTS, seed: int = 0) -> BoundsReport:
    p = _probs3(d)
    d3 = JointDist3(p / p.sum())
    ii = intrinsic_information(p, restarts=restarts, seed=seed)
    cw = wyner_intrinsic_ci(p, restarts=outer_restarts, seed=seed, intrinsic=ii)
    gkc = gk.conditional_gk_ci(d3)
    tgt = _perfect_bit() if target is None else _probs3(target)
    t_ii = intrinsic_information(tgt, restarts=restarts, seed=seed)
    t_cw = wyner_intrinsic_ci(tgt, restarts=outer_restarts, seed=seed, intrinsic=t_ii)
    rate = min(_ratio(ii.value, t_ii.value), _ratio(cw.value, t_cw.value))
    return BoundsReport(
        gk=gk.gk_ci(JointDist2(p.sum(axis=2) / p.sum())),
        mutual_information=mutual_information(d3, 0, 1),
        wyner=wyner_ci(p).value,
        gk_cond=gkc,
        cond_mutual_information=mutual_information(d3, 0, 1, 2),
        intrinsic=ii.value,
        wyner_intrinsic=cw.value,
        sk_rate_upper=ii.value,
        sk_cost_lower=ii.value,
        sk_cost=cw.value,
        zero_comm_rate_conjectured=gkc,
        rate_bound=rate,
    )


def compute(quantity, d, restarts: int | None = None, seed: int = 0) -> MeasureResult:
    """Dispatch by quantity name (CLI entry point)."""
    q = Quantity(quantity)
    if q is Quantity.GK:
        return gk_result(d)
    if q is Quantity.GK_COND:
        return gk_cond_result(d)
    if q is Quantity.GK_COND_PER_Z:
        return gk_cond_per_z_result(d)
    if q is Quantity.WYNER:
        return wyner_ci(d)
    if q is Quantity.WYNER_COND:
        return wyner_ci_cond(d)
    if q is Quantity.INTRINSIC:
        return intrinsic_information(d, restarts=DEFAULT_RESTARTS if restarts is None else restarts,
                                     seed=seed)
    kw = {"seed": seed}
    if restarts is not None:
        kw["restarts"] = restarts
    if q is Quantity.WYNER_INTRINSIC:
        return wyner_intrinsic_ci(d, **kw)
    return sk_cost(d, **kw)
