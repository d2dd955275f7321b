"""Named distributions: the worked examples, the pn/qn families, a perfect
secret bit and seeded random triples.

Builders return exact ``Fraction`` tables where possible so that support
membership and normalization are checked before conversion to floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .dist import JointDist3, NotNormalized, SctError

F = Fraction
Table = dict  # (x, y, z) -> Fraction or float


class UnknownName(SctError, KeyError):
    pass


class BadParam(SctError, ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    summary: str
    sizes: Callable[[int | None], tuple[int, int, int]]
    table: Callable[[int | None], Table]
    needs_n: bool = False


def _p1(_n=None) -> Table:
    t = {s: F(1, 8) for s in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]}
    t[(2, 2, 2)] = F(1, 4)
    t[(3, 3, 3)] = F(1, 4)
    return t


def _p2(_n=None) -> Table:
    t = _p1()
    del t[(3, 3, 3)]
    t[(3, 3, 2)] = F(1, 4)
    return t


def _p3(_n=None) -> Table:
    t = _p1()
    del t[(2, 2, 2)], t[(3, 3, 3)]
    t[(2, 2, 0)] = F(1, 4)
    t[(3, 3, 1)] = F(1, 4)
    return t


def _p4(_n=None) -> Table:
    t = {}
    for s in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)]:
        t[s] = F(1, 18)
    for s in [(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]:
        t[s] = F(1, 21)
    t[(0, 3, 2)] = t[(0, 4, 2)] = F(1, 15)
    t[(2, 5, 2)] = F(1, 5)
    t[(2, 2, 0)] = F(1, 9)
    t[(2, 2, 1)] = F(1, 7)
    return t


def _p5(_n=None) -> Table:
    t = {s: F(1, 10) for s in [(0, 0, 0), (0, 1, 1), (0, 2, 0), (1, 0, 1)]}
    t[(1, 1, 0)] = t[(1, 2, 1)] = F(1, 20)
    t[(2, 3, 0)] = t[(3, 3, 1)] = F(1, 4)
    return t


def _pn(n: int) -> Table:
    t = {}
    for x in range(n):
        for y in range(n):
            t[(x, y, (x + y) % n)] = F(1, 2 * n * n)
    for x in range(n, 2 * n):
        t[(x, x, x % n)] = F(1, 2 * n)
    return t


def _qn_scale(n: int):
    """1 / log2 n, exact when n is a power of two."""
    if n & (n - 1) == 0:
        return F(1, n.bit_length() - 1)
    return 1.0 / math.log2(n)


def _qn(n: int) -> Table:
    c = _qn_scale(n)
    t = {s: v * c for s, v in _pn(n).items()}
    t[(2 * n, 2 * n, n)] = 1 - c
    return t


def _psecret(_n=None) -> Table:
    return {(0, 0, 0): F(1, 2), (1, 1, 0): F(1, 2)}


def _check_n(name: str, n, low: int) -> int:
    if n is None:
        raise BadParam(f"{name} needs a parameter n")
    n = int(n)
    if n < low:
        raise BadParam(f"{name} needs n >= {low}, got {n}")
    return n


ENTRIES = {
    "p1": CatalogEntry("p1", "Eve sees the quadrant and, in the 2x2 block, the parity",
                       lambda n: (4, 4, 4), _p1),
    "p2": CatalogEntry("p2", "p1 with Eve's symbols 2 and 3 merged", lambda n: (4, 4, 3), _p2),
    "p3": CatalogEntry("p3", "p1 with Eve blind to the quadrant", lambda n: (4, 4, 2), _p3),
    "p4": CatalogEntry("p4", "conditionally resolvable, not resolvable", lambda n: (3, 6, 3), _p4),
    "p5": CatalogEntry("p5", "neither resolvable nor conditionally resolvable",
                       lambda n: (4, 4, 2), _p5),
    "pn": CatalogEntry("pn", "n x n block keyed by x+y mod n plus n diagonal symbols",
                       lambda n: (2 * n, 2 * n, n), _pn, needs_n=True),
    "qn": CatalogEntry("qn", "pn scaled by 1/log2 n plus a shared symbol of mass 1-1/log2 n",
                       lambda n: (2 * n + 1, 2 * n + 1, n + 1), _qn, needs_n=True),
    "psecret": CatalogEntry("psecret", "perfect secret bit, Eve constant",
                            lambda n: (2, 2, 1), _psecret),
}


def names() -> list[str]:
    return list(ENTRIES) + ["random"]


def exact_table(name: str, n: int | None = None) -> tuple[tuple[int, int, int], Table]:
    """Sizes and the exact table of a named entry (not ``random``)."""
    if name not in ENTRIES:
        raise UnknownName(name)
    e = ENTRIES[name]
    if e.needs_n:
        n = _check_n(name, n, 3 if name == "qn" else 2)
    table = e.table(n)
    total = sum(table.values())
    if isinstance(total, Fraction) and total != 1:
        raise NotNormalized(f"{name} sums to {total}")
    return e.sizes(n), table


def to_array(sizes, table: Table) -> np.ndarray:
    arr = np.zeros(sizes)
    for s, v in table.items():
        if v != 0:
            arr[s] = float(v)
    return arr


def random_dist(seed: int, sizes=(3, 3, 3)) -> JointDist3:
    rng = np.random.default_rng(seed)
    arr = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    return JointDist3(arr)


def get(name: str, n: int | None = None) -> JointDist3:
    """Build a catalog distribution.  ``random`` takes its seed as ``n``."""
    if name == "random":
        if n is None:
            raise BadParam("random needs a seed")
        return random_dist(int(n))
    sizes, table = exact_table(name, n)
    arr = to_array(sizes, table)
    return JointDist3(arr / arr.sum())


def parse_ref(ref: str) -> tuple[str, int | None]:
    """'qn:4' -> ('qn', 4); 'p1' -> ('p1', None)."""
    name, _, param = ref.partition(":")
    if not param:
        return name, None
    try:
        return name, int(param)
    except ValueError:
        raise BadParam(f"parameter of {name} must be an integer, got {param!r}") from None


def get_ref(ref: str) -> JointDist3:
    return get(*parse_ref(ref))
