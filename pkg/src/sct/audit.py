"""LOPC moves and randomized audits of candidate secrecy monotones.

A monotone may only decrease when Alice or Bob act (local channels or public
announcements) and may only increase when Eve acts.  Optimizer-based
measures are upper bounds, so before/after values are evaluated with matched
seeds and feasible witnesses are exchanged between the two problems where
the move allows it:

* moves that leave Z alone (alice_lo, bob_lo, eve_pc): any channel on Z is
  feasible before and after, in both directions;
* alice_pc / bob_pc: a channel W on Z lifts to (z, t) -> (W(z), t) on the
  enlarged Eve alphabet;
* eve_lo with channel V: an after-witness W' pulls back to V then W'.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import measures
from .dist import Channel, JointDist3, ShapeMismatch, SctError, apply_channel, tensor_product
from .measures import MeasureResult, Quantity
from .optim import DEFAULT_RESTARTS

EXACT_TOL = 1e-9
OPTIM_TOL = 1e-3
OPTIM_NOISE = 1e-6
PRODUCT_LIMIT = 4096


class ProductTooLarge(SctError, ValueError):
    pass


class MoveKind(str, enum.Enum):
    ALICE_LO = "alice_lo"
    BOB_LO = "bob_lo"
    ALICE_PC = "alice_pc"
    BOB_PC = "bob_pc"
    EVE_LO = "eve_lo"
    EVE_PC = "eve_pc"

    @property
    def axis(self) -> int:
        return {"alice": 0, "bob": 1, "eve": 2}[self.value.split("_")[0]]

    @property
    def is_pc(self) -> bool:
        return self.value.endswith("_pc")

    @property
    def expected(self) -> str:
        return "increase" if self.axis == 2 else "decrease"


@dataclass(frozen=True, eq=False)
class LopcMove:
    """A channel (lo kinds) or a deterministic map given as a Channel (pc kinds)."""

    kind: MoveKind
    payload: Channel

    def __post_init__(self):
        object.__setattr__(self, "kind", MoveKind(self.kind))
        if self.kind.is_pc and not self.payload.is_deterministic():
            raise ValueError("public announcements must be deterministic functions")

    @classmethod
    def function(cls, kind, mapping, out_size: int | None = None) -> "LopcMove":
        return cls(MoveKind(kind), Channel.deterministic(mapping, out_size))

    def describe(self) -> str:
        m = self.payload.matrix
        if self.kind.is_pc:
            return f"{self.kind.value}:f={tuple(int(i) for i in m.argmax(axis=1))}"
        return f"{self.kind.value}:{m.shape[0]}->{m.shape[1]}"


def _labels(d: JointDist3):
    if d.labels is not None:
        return [list(l) for l in d.labels]
    return [[str(i) for i in range(n)] for n in d.sizes]


def _adjoin(p: np.ndarray, source: int, targets: tuple[int, int], f: np.ndarray, k: int):
    """Copy t = f(symbol on ``source``) into both ``targets`` axes as (old, t) pairs."""
    onehot = np.zeros((p.shape[source], k))
    onehot[np.arange(p.shape[source]), f] = 1.0
    # axes (x, y, z, t), t read off the source axis
    shape = [1, 1, 1, k]
    shape[source] = p.shape[source]
    q = p[..., None] * onehot.reshape(shape)
    a, b = targets
    # second copy of t on axis b: diagonal in (t, t')
    q = q[..., None] * np.eye(k).reshape((1, 1, 1, k, k))
    # now axes (x, y, z, t, t'); move t next to a and t' next to b
    order = [0, 1, 2]
    out_shape = list(p.shape)
    out_shape[a] *= k
    out_shape[b] *= k
    perm = []
    for ax in order:
        perm.append(ax)
        if ax == a:
            perm.append(3)
        if ax == b:
            perm.append(4)
    return q.transpose(perm).reshape(out_shape)


def apply_move(d: JointDist3, m: LopcMove) -> JointDist3:
    """Transformed distribution; pc moves flatten (old, t) pairs to old * k + t."""
    kind = m.kind
    ax = kind.axis
    if m.payload.in_size != d.sizes[ax]:
        raise ShapeMismatch(f"{kind.value} payload acts on {m.payload.in_size} symbols, "
                            f"axis has {d.sizes[ax]}")
    if not kind.is_pc:
        return apply_channel(d, ax, m.payload)
    f = m.payload.matrix.argmax(axis=1)
    k = m.payload.out_size
    targets = tuple(i for i in range(3) if i != ax)
    arr = _adjoin(d.probs, ax, targets, f, k)
    labels = _labels(d)
    for t in targets:
        labels[t] = [f"{s}|{j}" for s in labels[t] for j in range(k)]
    arr = arr / arr.sum()
    return JointDist3(arr, labels=tuple(tuple(l) for l in labels), zero_tol=d.zero_tol)


def random_move(kind: MoveKind, sizes, rng: np.random.Generator) -> LopcMove:
    """Dirichlet(1) rows for lo kinds; a uniform map onto 1..n symbols for pc."""
    n = sizes[kind.axis]
    if kind.is_pc:
        k = int(rng.integers(1, n + 1))
        mapping = rng.integers(0, k, size=n)
        return LopcMove(kind, Channel.deterministic(mapping, k))
    return LopcMove(kind, Channel(rng.dirichlet(np.ones(n), size=n)))


# ---------------------------------------------------------------- evaluation

def evaluate(measure, d, restarts: int | None = None, seed: int = 0,
             candidates=()) -> MeasureResult:
    q = Quantity(measure)
    if q.exact or q in (Quantity.WYNER, Quantity.WYNER_COND):
        return measures.compute(q, d)
    if q is Quantity.INTRINSIC:
        return measures.intrinsic_information(
            d, restarts=DEFAULT_RESTARTS if restarts is None else restarts, seed=seed,
            candidates=candidates)
    kw = {} if restarts is None else {"restarts": restarts}
    return measures.wyner_intrinsic_ci(d, seed=seed, candidates=candidates, quantity=q, **kw)


def screen(measure, d, candidates=()) -> MeasureResult:
    """Cheap upper bound for an outer-minimized measure: identity, deterministic
    channels and the given candidates, no continuous search."""
    q = Quantity(measure)
    if q is Quantity.INTRINSIC:
        return measures.intrinsic_information(d, restarts=0, candidates=candidates)
    return measures.wyner_intrinsic_ci(d, restarts=0, candidates=candidates, quantity=q,
                                       include_intrinsic=False, polish=False)


def value_at_channel(measure, d, channel: Channel) -> float:
    """Objective of an outer-minimized measure at a fixed Eve channel."""
    q = Quantity(measure)
    p = d.probs if isinstance(d, JointDist3) else np.asarray(d)
    deg = measures.degrade(p, channel.matrix)
    if q is Quantity.INTRINSIC:
        from .dist import cond_mutual_info_array
        return cond_mutual_info_array(deg, (0,), (1,), (2,))
    return measures._cond_wyner(deg, measures.wyner.GAP_TOL)[0]


def _has_channel(q: Quantity) -> bool:
    return q in (Quantity.INTRINSIC, Quantity.WYNER_INTRINSIC, Quantity.SK_COST)


def forward_witness(m: LopcMove, w: Channel) -> Channel | None:
    """Feasible after-move channel built from a before-move witness."""
    kind = m.kind
    if kind in (MoveKind.ALICE_LO, MoveKind.BOB_LO, MoveKind.EVE_PC):
        return w
    if kind in (MoveKind.ALICE_PC, MoveKind.BOB_PC):
        return Channel(np.kron(w.matrix, np.eye(m.payload.out_size)))
    return None


def backward_witness(m: LopcMove, w_after: Channel) -> Channel | None:
    """Feasible before-move channel built from an after-move witness."""
    kind = m.kind
    if kind in (MoveKind.ALICE_LO, MoveKind.BOB_LO, MoveKind.EVE_PC):
        return w_after
    if kind is MoveKind.EVE_LO:
        return m.payload.compose(w_after)
    return None


@dataclass(frozen=True)
class AuditTrial:
    index: int
    move: LopcMove
    value_before: float
    value_after: float
    expected_direction: str
    verdict: str
    transported: bool = False

    @property
    def deviation(self) -> float:
        """Amount by which the required inequality fails (<= 0 when it holds)."""
        return _deviation(self.value_before, self.value_after, self.expected_direction)


@dataclass
class AuditReport:
    measure: Quantity
    seed: int
    tol: float
    trials: list = field(default_factory=list)

    @property
    def violation_count(self) -> int:
        return sum(t.verdict == "violation" for t in self.trials)

    @property
    def inconclusive_count(self) -> int:
        return sum(t.verdict == "inconclusive" for t in self.trials)

    @property
    def pass_count(self) -> int:
        return sum(t.verdict == "pass" for t in self.trials)

    @property
    def max_deviation(self) -> float:
        return max((t.deviation for t in self.trials), default=0.0)


def _deviation(before: float, after: float, expected: str) -> float:
    return after - before if expected == "decrease" else before - after


def _verdict(dev: float, tol: float, noise: float) -> str:
    if dev <= noise:
        return "pass"
    if dev <= tol:
        return "inconclusive"
    return "violation"


def _pull_back(q, d, move, after, v_before):
    back = backward_witness(move, after.channel)
    if back is not None:
        v = value_at_channel(q, d, back)
        if v < v_before - 1e-12:
            return v, True
    return v_before, False


def run_trial(measure, d: JointDist3, move: LopcMove, before: MeasureResult,
              restarts: int | None = None, seed: int = 0, tol: float | None = None,
              index: int = 0) -> AuditTrial:
    q = Quantity(measure)
    exact = q.exact
    tol = (EXACT_TOL if exact else OPTIM_TOL) if tol is None else tol
    noise = tol if exact else min(OPTIM_NOISE, tol)
    after_d = apply_move(d, move)
    v_before = before.value
    transported = False
    if _has_channel(q):
        cand = forward_witness(move, before.channel)
        cands = [cand] if cand else ()
        # A transported witness bounds the after value from above and a pulled-back
        # one bounds the before value; either settles most trials without a search.
        after, transported = None, False
        if cand is not None:
            v = value_at_channel(q, after_d, cand)
            if _verdict(_deviation(v_before, v, move.kind.expected), tol, noise) == "pass":
                after = MeasureResult(q, v, False, {"channel": cand},
                                      {"source": "candidate"})
        if after is None:
            after = screen(q, after_d, cands)
            v_before, transported = _pull_back(q, d, move, after, v_before)
        dev = _deviation(v_before, after.value, move.kind.expected)
        if _verdict(dev, tol, noise) != "pass":
            after = evaluate(q, after_d, restarts, seed, candidates=cands)
            v_before, again = _pull_back(q, d, move, after, v_before)
            transported = transported or again
        transported = transported or after.residuals.get("source") == "candidate"
    else:
        after = evaluate(q, after_d, restarts, seed)
    trial = AuditTrial(index, move, v_before, after.value, move.kind.expected, "pass",
                       transported)
    return AuditTrial(index, move, v_before, after.value, move.kind.expected,
                      _verdict(trial.deviation, tol, noise), transported)


def audit_measure(measure, d: JointDist3, trials: int = 100, seed: int = 0,
                  tol: float | None = None, kinds=None,
                  restarts: int | None = None) -> AuditReport:
    """Apply ``trials`` random moves to ``d`` and check the monotone direction.

    Move kinds cycle through ``kinds`` (all six by default) and payloads are
    drawn from ``default_rng([seed, trial])``.
    """
    q = Quantity(measure)
    tol = (EXACT_TOL if q.exact else OPTIM_TOL) if tol is None else tol
    kinds = [MoveKind(k) for k in (kinds or list(MoveKind))]
    before = evaluate(q, d, restarts, seed)
    report = AuditReport(q, seed, tol)
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        move = random_move(kinds[i % len(kinds)], d.sizes, rng)
        report.trials.append(run_trial(q, d, move, before, restarts, seed, tol, i))
    return report


# ------------------------------------------------- Eve-channel violation search

@dataclass(frozen=True)
class ViolationInstance:
    dist: JointDist3
    channel: Channel
    gap: float
    value_before: float
    value_after: float


def _eve_channels(nz: int, rng, budget: int):
    """Deterministic channels first (all of them when feasible), then Dirichlet rows."""
    out = []
    if nz ** nz <= budget:
        from .optim import enumerate_deterministic_channels
        out.extend(enumerate_deterministic_channels(nz, nz))
    while len(out) < budget:
        out.append(Channel(rng.dirichlet(np.ones(nz), size=nz)))
    return out


def find_eve_lo_violation(measure, d: JointDist3 | None = None, budget: int = 200,
                          seed: int = 0, margin: float = OPTIM_TOL,
                          restarts: int | None = None, n_dists: int = 10):
    """Search for a Eve channel that lowers the measure by more than ``margin``.

    With ``d`` given, every deterministic channel (when there are at most
    ``budget`` of them) and then random channels are tried on ``d``.
    Otherwise ``budget`` moves are spread over ``n_dists`` random 3x3x3
    distributions.  Returns (found, best instance or None).
    """
    q = Quantity(measure)
    rng = np.random.default_rng(seed)
    if d is not None:
        dists = [d]
        per = budget
    else:
        dists = [JointDist3(rng.dirichlet(np.ones(27)).reshape(3, 3, 3)) for _ in range(n_dists)]
        per = max(1, budget // n_dists)
    best = None
    for dist in dists:
        before = evaluate(q, dist, restarts, seed)
        for ch in _eve_channels(dist.sizes[2], rng, per):
            move = LopcMove(MoveKind.EVE_LO, ch)
            t = run_trial(q, dist, move, before, restarts, seed, margin)
            gap = t.value_before - t.value_after
            if best is None or gap > best.gap:
                best = ViolationInstance(dist, ch, gap, t.value_before, t.value_after)
    found = best is not None and best.gap > margin
    return found, best


# ---------------------------------------------------------------- additivity

@dataclass(frozen=True)
class AdditivityResult:
    passed: bool
    lhs: float
    rhs: float

    @property
    def difference(self) -> float:
        return self.lhs - self.rhs


def additivity_check(measure, d1: JointDist3, d2: JointDist3, tol: float = OPTIM_TOL,
                     restarts: int | None = None, seed: int = 0,
                     limit: int = PRODUCT_LIMIT) -> AdditivityResult:
    """Compare M(d1 x d2) with M(d1) + M(d2).

    For outer-minimized measures the tensor product of the factor witnesses
    is offered as a candidate channel for the product problem.
    """
    q = Quantity(measure)
    size = int(np.prod(d1.sizes)) * int(np.prod(d2.sizes))
    if size > limit:
        raise ProductTooLarge(f"product alphabet has {size} cells, limit is {limit}")
    prod = tensor_product(d1, d2)
    m1 = evaluate(q, d1, restarts, seed)
    m2 = evaluate(q, d2, restarts, seed)
    cands = ()
    if _has_channel(q):
        cands = [Channel(np.kron(m1.channel.matrix, m2.channel.matrix))]
    m12 = evaluate(q, prod, restarts, seed, candidates=cands)
    lhs, rhs = m12.value, m1.value + m2.value
    return AdditivityResult(abs(lhs - rhs) <= tol, lhs, rhs)
