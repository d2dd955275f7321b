"""Finite joint distributions, channels and elementary information measures.

All logarithms are base 2, so every quantity is in bits.  Axes are addressed
either by position (0, 1, 2) or by party name ('x', 'y', 'z').
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-9
ZERO_TOL = 1e-12

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}


class SctError(Exception):
    """Base class for errors raised by this package."""


class NegativeEntry(SctError, ValueError):
    pass


class NotNormalized(SctError, ValueError):
    pass


class ShapeMismatch(SctError, ValueError):
    pass


class SizeMismatch(SctError, ValueError):
    pass


class EmptyAxisSet(SctError, ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _check_pmf_array(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NotNormalized("distribution contains non-finite entries")
    if np.any(arr < 0):
        idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
        raise NegativeEntry(f"negative probability {arr[idx]!r} at {idx}")
    total = float(arr.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise NotNormalized(f"entries sum to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class JointDist:
    """Dense joint pmf over a product of finite alphabets.

    ``probs`` is stored read-only.  ``labels`` optionally names the symbols of
    each axis.  Entries below ``zero_tol`` are outside the support.
    """

    probs: np.ndarray
    labels: tuple[tuple[str, ...], ...] | None = None
    zero_tol: float = ZERO_TOL
    ndim: int = field(init=False, repr=False)

    def __post_init__(self):
        arr = _frozen(self.probs)
        if arr.ndim == 0 or any(s < 1 for s in arr.shape):
            raise ShapeMismatch(f"bad distribution shape {arr.shape}")
        _check_pmf_array(arr)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "ndim", arr.ndim)
        if self.labels is not None:
            labels = tuple(tuple(str(s) for s in ax) for ax in self.labels)
            if len(labels) != arr.ndim or any(len(l) != n for l, n in zip(labels, arr.shape)):
                raise ShapeMismatch("labels do not match the alphabet sizes")
            object.__setattr__(self, "labels", labels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def support(self) -> np.ndarray:
        return self.probs > self.zero_tol

    @property
    def support_size(self) -> int:
        return int(self.support.sum())

    def __eq__(self, other):
        if not isinstance(other, JointDist):
            return NotImplemented
        return self.sizes == other.sizes and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.sizes, self.probs.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(sizes={self.sizes}, support={self.support_size})"


class JointDist3(JointDist):
    """Joint pmf of (X, Y, Z): Alice, Bob and Eve."""

    def __post_init__(self):
        super().__post_init__()
        if self.ndim != 3:
            raise ShapeMismatch(f"JointDist3 needs a 3-axis array, got shape {self.probs.shape}")


class JointDist2(JointDist):
    """Joint pmf of a pair (X, Y)."""

    def __post_init__(self):
        super().__post_init__()
        if self.ndim != 2:
            raise ShapeMismatch(f"JointDist2 needs a 2-axis array, got shape {self.probs.shape}")


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix; ``matrix[i, j]`` is Pr(out = j | in = i)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ShapeMismatch(f"channel matrix must be 2-D, got shape {m.shape}")
        if np.any(m < 0):
            raise NegativeEntry("channel has a negative transition probability")
        rows = m.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > NORM_TOL):
            raise NotNormalized(f"channel rows sum to {rows}")
        object.__setattr__(self, "matrix", m)

    @property
    def in_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def out_size(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, n: int, out_size: int = 1, symbol: int = 0) -> "Channel":
        m = np.zeros((n, out_size))
        m[:, symbol] = 1.0
        return cls(m)

    @classmethod
    def deterministic(cls, mapping: Sequence[int], out_size: int | None = None) -> "Channel":
        mapping = [int(v) for v in mapping]
        out_size = max(mapping) + 1 if out_size is None else out_size
        m = np.zeros((len(mapping), out_size))
        m[np.arange(len(mapping)), mapping] = 1.0
        return cls(m)

    def is_deterministic(self) -> bool:
        return bool(np.all((self.matrix == 0) | (self.matrix == 1)))

    def compose(self, after: "Channel") -> "Channel":
        """Channel that applies ``self`` first and ``after`` second."""
        if self.out_size != after.in_size:
            raise SizeMismatch("channel sizes do not chain")
        return Channel(self.matrix @ after.matrix)

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))


def axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return _AXIS_NAMES[axis.lower()]
        except KeyError:
            raise ValueError(f"unknown axis name {axis!r}") from None
    return int(axis)


def validate(raw, labels=None, zero_tol: float = ZERO_TOL) -> JointDist3:
    """Check a raw 3-axis array and wrap it as a :class:`JointDist3`."""
    return JointDist3(np.asarray(raw, dtype=np.float64), labels=labels, zero_tol=zero_tol)


def as_dist(probs, labels=None, zero_tol: float = ZERO_TOL) -> JointDist:
    probs = np.asarray(probs, dtype=np.float64)
    cls = {2: JointDist2, 3: JointDist3}.get(probs.ndim, JointDist)
    return cls(probs, labels=labels, zero_tol=zero_tol)


def marginalize(d: JointDist, keep: Iterable) -> JointDist | np.ndarray:
    """Sum out every axis not in ``keep``.

    Kept axes stay in their original order.  A single kept axis returns a
    plain 1-D pmf array.
    """
    keep = sorted({axis_index(a) for a in keep})
    if not keep:
        raise EmptyAxisSet("marginalize needs at least one axis to keep")
    if keep[-1] >= d.ndim or keep[0] < 0:
        raise ValueError(f"axis out of range for a {d.ndim}-axis distribution")
    drop = tuple(a for a in range(d.ndim) if a not in keep)
    arr = d.probs.sum(axis=drop) if drop else d.probs
    arr = arr / arr.sum()
    if len(keep) == 1:
        return np.array(arr)
    labels = None if d.labels is None else tuple(d.labels[a] for a in keep)
    return as_dist(arr, labels=labels, zero_tol=d.zero_tol)


def _xlogx(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a, dtype=np.float64)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos])
    return out


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p.probs if isinstance(p, JointDist) else p, dtype=np.float64)
    return float(max(-_xlogx(p.ravel()).sum(), 0.0))


def cond_mutual_info_array(p: np.ndarray, a: Sequence[int], b: Sequence[int],
                           c: Sequence[int] = ()) -> float:
    """I(A;B|C) in bits of an n-axis joint array; axis groups are disjoint.

    Computed by direct summation over the support of the (A,B,C) marginal.
    Works for unnormalized non-negative arrays (degree-1 homogeneous).
    """
    a, b, c = tuple(a), tuple(b), tuple(c)
    keep = a + b + c
    drop = tuple(i for i in range(p.ndim) if i not in keep)
    j = p.sum(axis=drop, keepdims=True) if drop else p
    jac = j.sum(axis=b, keepdims=True)
    jbc = j.sum(axis=a, keepdims=True)
    jc = jac.sum(axis=a, keepdims=True)
    pos = j > 0
    jb = np.broadcast_to(jac, j.shape)[pos]
    jb2 = np.broadcast_to(jbc, j.shape)[pos]
    jcc = np.broadcast_to(jc, j.shape)[pos]
    val = j[pos] * np.log2(j[pos] * jcc / (jb * jb2))
    return float(max(val.sum(), 0.0))


def mutual_information(d: JointDist, a, b, given=None) -> float:
    """I(A;B) or I(A;B|C) in bits between single axes of ``d``."""
    ai, bi = axis_index(a), axis_index(b)
    ci = () if given is None else (axis_index(given),)
    if ai == bi or ai in ci or bi in ci:
        raise ValueError("mutual_information needs distinct axes")
    return cond_mutual_info_array(d.probs, (ai,), (bi,), ci)


def tv_distance(d1: JointDist, d2: JointDist) -> float:
    if d1.sizes != d2.sizes:
        raise ShapeMismatch(f"cannot compare shapes {d1.sizes} and {d2.sizes}")
    return float(0.5 * np.abs(d1.probs - d2.probs).sum())


def tensor_product(d1: JointDist, d2: JointDist) -> JointDist:
    """Product distribution over paired alphabets.

    Paired symbol (s1, s2) on each axis is flattened to ``s1 * n2 + s2``.
    """
    if d1.ndim != d2.ndim:
        raise ShapeMismatch("tensor_product needs distributions with the same number of axes")
    n = d1.ndim
    outer = np.multiply.outer(d1.probs, d2.probs)
    # interleave axes: (a1, b1, c1, a2, b2, c2) -> (a1, a2, b1, b2, c1, c2)
    order = [k for i in range(n) for k in (i, i + n)]
    arr = outer.transpose(order).reshape([s1 * s2 for s1, s2 in zip(d1.sizes, d2.sizes)])
    labels = None
    if d1.labels is not None and d2.labels is not None:
        labels = tuple(tuple(f"({u},{v})" for u in l1 for v in l2)
                       for l1, l2 in zip(d1.labels, d2.labels))
    return as_dist(arr / arr.sum(), labels=labels, zero_tol=min(d1.zero_tol, d2.zero_tol))


def apply_channel(d: JointDist, axis, ch: Channel) -> JointDist:
    """Push one axis of ``d`` through ``ch``; other axes are untouched."""
    ax = axis_index(axis)
    if ch.in_size != d.sizes[ax]:
        raise SizeMismatch(
            f"channel expects {ch.in_size} input symbols, axis {ax} has {d.sizes[ax]}")
    moved = np.moveaxis(d.probs, ax, -1) @ ch.matrix
    arr = np.moveaxis(moved, -1, ax)
    arr = arr / arr.sum()
    labels = None
    if d.labels is not None:
        labels = list(d.labels)
        labels[ax] = tuple(str(i) for i in range(ch.out_size))
        labels = tuple(labels)
    return as_dist(arr, labels=labels, zero_tol=d.zero_tol)


def drop_unused_symbols(d: JointDist) -> tuple[JointDist, list[np.ndarray]]:
    """Remove symbols with zero marginal mass; returns the kept indices per axis."""
    kept = []
    arr = d.probs
    for ax in range(d.ndim):
        other = tuple(i for i in range(d.ndim) if i != ax)
        m = d.probs.sum(axis=other) if other else d.probs
        kept.append(np.nonzero(m > d.zero_tol)[0])
    arr = arr[np.ix_(*kept)]
    labels = None
    if d.labels is not None:
        labels = tuple(tuple(l[i] for i in k) for l, k in zip(d.labels, kept))
    return as_dist(arr / arr.sum(), labels=labels, zero_tol=d.zero_tol), kept
