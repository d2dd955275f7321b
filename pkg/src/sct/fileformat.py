"""Line-oriented text format for tripartite distributions.

    # comment
    name p3
    alphabets 4 4 2
    labels x a b c d
    entry 0 0 0 1/8

Tokens are separated by single spaces.  Probabilities are either rationals
``p/q`` or plain decimals; both are read exactly, so zero entries and the
normalization check are decided before conversion to floats.
"""
from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

from .dist import NORM_TOL, JointDist3, NotNormalized, SctError

_RATIONAL = re.compile(r"[0-9]+/[0-9]+")
_DECIMAL = re.compile(r"[0-9]+(\.[0-9]+)?([eE][-+]?[0-9]+)?|\.[0-9]+([eE][-+]?[0-9]+)?")
_AXES = {"x": 0, "y": 1, "z": 2}
MAX_DENOMINATOR = 10 ** 6
RATIONAL_TOL = 1e-15


class DistSyntaxError(SctError, SyntaxError):
    """Malformed distribution text; ``lineno`` is 1-based."""

    def __init__(self, msg: str, lineno: int):
        super().__init__(msg)
        self.lineno = lineno


def _prob(tok: str, lineno: int) -> Fraction:
    if _RATIONAL.fullmatch(tok):
        num, den = tok.split("/")
        if int(den) == 0:
            raise DistSyntaxError(f"zero denominator in {tok!r}", lineno)
        return Fraction(int(num), int(den))
    if _DECIMAL.fullmatch(tok):
        return Fraction(tok)
    raise DistSyntaxError(f"bad probability {tok!r}", lineno)


def _int(tok: str, lineno: int) -> int:
    if not tok.isdigit():
        raise DistSyntaxError(f"expected a non-negative integer, got {tok!r}", lineno)
    return int(tok)


def parse_exact(text: str):
    """Parse to (sizes, {(x, y, z): Fraction}, labels, name) without float conversion."""
    sizes = None
    entries: dict[tuple[int, int, int], Fraction] = {}
    labels: list = [None, None, None]
    name = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        toks = line.split(" ")
        if any(t == "" for t in toks):
            raise DistSyntaxError("tokens must be separated by single spaces", lineno)
        head, args = toks[0], toks[1:]
        if head == "alphabets":
            if sizes is not None:
                raise DistSyntaxError("duplicate alphabets header", lineno)
            if len(args) != 3:
                raise DistSyntaxError("alphabets needs three sizes", lineno)
            sizes = tuple(_int(a, lineno) for a in args)
            if min(sizes) < 1:
                raise DistSyntaxError("alphabet sizes must be positive", lineno)
        elif head == "name":
            if len(args) != 1:
                raise DistSyntaxError("name takes one token", lineno)
            name = args[0]
        elif head == "labels":
            if sizes is None:
                raise DistSyntaxError("labels before alphabets header", lineno)
            if not args or args[0] not in _AXES:
                raise DistSyntaxError("labels needs an axis x, y or z", lineno)
            ax = _AXES[args[0]]
            if len(args) - 1 != sizes[ax]:
                raise DistSyntaxError(f"expected {sizes[ax]} labels for axis {args[0]}", lineno)
            labels[ax] = tuple(args[1:])
        elif head == "entry":
            if sizes is None:
                raise DistSyntaxError("entry before alphabets header", lineno)
            if len(args) != 4:
                raise DistSyntaxError("entry needs x y z prob", lineno)
            idx = tuple(_int(a, lineno) for a in args[:3])
            for i, n in zip(idx, sizes):
                if i >= n:
                    raise DistSyntaxError(f"index {i} outside alphabet of size {n}", lineno)
            if idx in entries:
                raise DistSyntaxError(f"duplicate entry {idx}", lineno)
            entries[idx] = _prob(args[3], lineno)
        else:
            raise DistSyntaxError(f"unknown keyword {head!r}", lineno)
    if sizes is None:
        raise DistSyntaxError("missing alphabets header", max(1, len(text.splitlines())))
    total = sum(entries.values(), Fraction(0))
    if abs(total - 1) > Fraction(NORM_TOL):
        raise NotNormalized(f"entries sum to {float(total)!r}, expected 1")
    if all(l is None for l in labels):
        labels = None
    elif any(l is None for l in labels):
        labels = tuple(l if l is not None else tuple(str(i) for i in range(n))
                       for l, n in zip(labels, sizes))
    else:
        labels = tuple(labels)
    return sizes, entries, labels, name


def parse_dist(text: str) -> JointDist3:
    sizes, entries, labels, _ = parse_exact(text)
    arr = np.zeros(sizes)
    for idx, v in entries.items():
        if v != 0:
            arr[idx] = float(v)
    return JointDist3(arr, labels=labels)


def format_prob(v) -> str:
    """Rational when a small-denominator fraction is within 1e-15, else 17 digits."""
    if isinstance(v, Fraction) and v.denominator <= MAX_DENOMINATOR:
        return f"{v.numerator}/{v.denominator}"
    v = float(v)
    fr = Fraction(v).limit_denominator(MAX_DENOMINATOR)
    if abs(float(fr) - v) <= RATIONAL_TOL:
        return f"{fr.numerator}/{fr.denominator}"
    return format(v, ".17g")


def serialize_dist(d: JointDist3, name: str | None = None) -> str:
    lines = []
    if name:
        lines.append(f"name {name}")
    lines.append("alphabets {} {} {}".format(*d.sizes))
    if d.labels is not None:
        for ax, labs in zip("xyz", d.labels):
            if any(" " in l or not l for l in labs):
                raise ValueError("labels must be non-empty and contain no spaces")
            lines.append(f"labels {ax} " + " ".join(labs))
    for idx in zip(*np.nonzero(d.probs > 0)):
        lines.append("entry {} {} {} ".format(*(int(i) for i in idx)) + format_prob(d.probs[idx]))
    return "\n".join(lines) + "\n"


def serialize_table(sizes, table: dict, name: str | None = None) -> str:
    """Serialize an exact ``{(x, y, z): Fraction}`` table."""
    lines = [f"name {name}"] if name else []
    lines.append("alphabets {} {} {}".format(*sizes))
    for idx in sorted(table):
        if table[idx] != 0:
            lines.append("entry {} {} {} ".format(*idx) + format_prob(table[idx]))
    return "\n".join(lines) + "\n"


def read_dist(path) -> JointDist3:
    with open(path, encoding="utf-8") as fh:
        return parse_dist(fh.read())


def write_dist(d: JointDist3, path, name: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_dist(d, name))
