"""Multi-start descent over products of probability simplices.

An optimization variable is a list of row-stochastic blocks.  Objectives are
callables ``f(blocks) -> (value, grads)`` returning the value in bits and one
gradient array per block (same shapes).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .dist import Channel, SctError

Blocks = list
Objective = Callable[[Blocks], tuple]

DEFAULT_RESTARTS = 64
DEFAULT_SCHEDULE = (1.0, 10.0, 100.0, 1000.0)
FEASIBILITY_TOL = 1e-6
ENUMERATION_CAP = 10 ** 6


class NonFiniteObjective(SctError, ArithmeticError):
    pass


class EnumerationTooLarge(SctError, ValueError):
    pass


@dataclass(frozen=True)
class SimplexProductSpec:
    """Shapes of the stochastic blocks: ``(row_count, simplex_dimension)`` each."""

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blocks = tuple((int(r), int(k)) for r, k in self.blocks)
        if not blocks or any(r < 1 or k < 1 for r, k in blocks):
            raise ValueError(f"invalid block dimensions {self.blocks}")
        object.__setattr__(self, "blocks", blocks)

    def sample(self, rng: np.random.Generator) -> Blocks:
        """Draw every row from a symmetric Dirichlet(1)."""
        return [rng.dirichlet(np.ones(k), size=r) for r, k in self.blocks]

    def uniform(self) -> Blocks:
        return [np.full((r, k), 1.0 / k) for r, k in self.blocks]


@dataclass
class OptimResult:
    value: float
    params: Blocks
    feasibility_residual: float = 0.0
    restarts_used: int = 0
    converged: bool = True
    best_restart_seed: int = 0
    restart_values: list = field(default_factory=list, repr=False)


def project_simplex_rows(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto the probability simplex."""
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    w = np.maximum(v - theta[:, None], 0.0)
    # rounding can leave rows a few ulps away from 1
    return w / w.sum(axis=1, keepdims=True)


def _eval(objective: Objective, x: Blocks) -> tuple[float, list]:
    val, grads = objective(x)
    return float(val), [np.asarray(g, dtype=np.float64) for g in grads]


def _pgd_step(x, g, t):
    return [project_simplex_rows(xi - t * gi) for xi, gi in zip(x, g)]


def _mirror_step(x, g, t):
    out = []
    for xi, gi in zip(x, g):
        gi = np.where(np.isfinite(gi), gi, -1e3)
        e = xi * np.exp(-t * (gi - gi.min(axis=1, keepdims=True)))
        e = np.maximum(e, 1e-300)
        out.append(e / e.sum(axis=1, keepdims=True))
    return out


_STEPS = {"pgd": _pgd_step, "mirror": _mirror_step}


def local_descent(objective: Objective, x0: Blocks, method: str = "pgd",
                  tol: float = 1e-12, max_iter: int = 2000,
                  step0: float = 1.0, min_step: float = 1e-16) -> tuple[Blocks, float]:
    """Gradient descent with Armijo backtracking and step growth on success.

    Stops when the relative improvement drops below ``tol``, the point stops
    moving, or backtracking falls under ``min_step``.
    """
    step = _STEPS[method]
    x = [np.array(b, dtype=np.float64) for b in x0]
    f, g = _eval(objective, x)
    if not np.isfinite(f):
        raise NonFiniteObjective(f"objective is {f} at the starting point")
    t = step0
    for _ in range(max_iter):
        g = [np.where(np.isfinite(gi), gi, np.sign(gi) * 1e3) for gi in g]
        while True:
            xn = step(x, g, t)
            fn, gn = _eval(objective, xn)
            decrease = sum(float((gi * (a - b)).sum()) for gi, a, b in zip(g, xn, x))
            if np.isfinite(fn) and fn <= f + 1e-4 * decrease:
                break
            t *= 0.5
            if t < min_step:
                return x, f
        moved = max(float(np.abs(a - b).max()) for a, b in zip(xn, x))
        improvement = f - fn
        x, f, g = xn, fn, gn
        if improvement <= tol * max(1.0, abs(f)) or moved < 1e-13:
            break
        t = min(t * 2.0, 1e6)
    return x, f


def _restart_points(spec: SimplexProductSpec, restarts: int, seed: int, starts) -> list:
    points = [[np.array(b, dtype=np.float64) for b in s] for s in (starts or [])]
    for i in range(restarts):
        points.append(spec.sample(np.random.default_rng([seed, i])))
    return points


def minimize(spec: SimplexProductSpec, objective: Objective, restarts: int = DEFAULT_RESTARTS,
             seed: int = 0, tol: float = 1e-12, method: str = "pgd", starts=None,
             max_iter: int = 2000) -> OptimResult:
    """Best local minimum over warm starts plus ``restarts`` Dirichlet(1) draws.

    Restart ``i`` is seeded with ``(seed, i)``, so results are reproducible and
    independent of evaluation order.  Warm starts in ``starts`` come first in
    the restart numbering.
    """
    points = _restart_points(spec, restarts, seed, starts)
    if not points:
        raise ValueError("minimize needs at least one restart or start point")
    best = None
    values = []
    for idx, x0 in enumerate(points):
        x, f = local_descent(objective, x0, method=method, tol=tol, max_iter=max_iter)
        values.append(f)
        if best is None or f < best[0]:
            best = (f, idx, x)
    f, idx, x = best
    return OptimResult(value=f, params=x, feasibility_residual=0.0, restarts_used=len(points),
                       converged=True, best_restart_seed=idx, restart_values=values)


def minimize_with_penalty(spec: SimplexProductSpec, objective: Objective, constraint: Objective,
                          schedule: Sequence[float] = DEFAULT_SCHEDULE,
                          restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                          tol: float = FEASIBILITY_TOL, method: str = "pgd", starts=None,
                          max_iter: int = 2000) -> OptimResult:
    """Penalty continuation for ``min objective s.t. constraint == 0``.

    ``constraint`` must be non-negative.  Each weight in ``schedule`` warm
    starts from the previous solution.  Restarts whose final residual is
    within ``tol`` beat infeasible ones; among equals the lower objective and
    then the lower restart index wins.
    """
    points = _restart_points(spec, restarts, seed, starts)
    if not points:
        raise ValueError("minimize_with_penalty needs at least one start")
    best_key = None
    best = None
    values = []
    for idx, x in enumerate(points):
        for lam in schedule:
            def penalized(b, lam=lam):
                f, gf = objective(b)
                c, gc = constraint(b)
                return f + lam * c, [a + lam * q for a, q in zip(gf, gc)]
            x, _ = local_descent(penalized, x, method=method, max_iter=max_iter)
        f, _ = _eval(objective, x)
        c, _ = _eval(constraint, x)
        c = max(c, 0.0)
        values.append((f, c))
        feasible = c <= tol
        key = (not feasible, f if feasible else c, idx)
        if best_key is None or key < best_key:
            best_key, best = key, (f, c, idx, x)
    f, c, idx, x = best
    return OptimResult(value=f, params=x, feasibility_residual=c, restarts_used=len(points),
                       converged=c <= tol, best_restart_seed=idx, restart_values=values)


def enumerate_deterministic_channels(in_size: int, out_size: int,
                                     cap: int = ENUMERATION_CAP) -> Iterator[Channel]:
    """Yield every deterministic map ``in -> out`` exactly once as a 0/1 channel."""
    if in_size < 1 or out_size < 1:
        raise ValueError("channel sizes must be positive")
    if out_size ** in_size > cap:
        raise EnumerationTooLarge(f"{out_size}^{in_size} maps exceed the cap of {cap}")
    return _deterministic(in_size, out_size)


def _deterministic(in_size, out_size):
    for mapping in itertools.product(range(out_size), repeat=in_size):
        yield Channel.deterministic(mapping, out_size)


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings: every partition of ``range(n)`` once.

    Entry ``i`` is the block of element ``i``; blocks are numbered in order of
    first appearance.  Deterministic channels up to output relabeling are in
    one-to-one correspondence with these.
    """
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i, m):
        if i == n:
            yield tuple(a)
            return
        for v in range(m + 2):
            a[i] = v
            yield from rec(i + 1, max(m, v))

    yield from rec(1, 0)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
