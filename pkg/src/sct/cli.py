"""Command-line interface.

Every command writes a human-readable table and/or ``key=value`` records to
standard output; ``--json-lines`` replaces both with one JSON object per
record.  Exit status: 0 success, 1 computation error, 2 usage error.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import audit, catalog, gk, measures
from .dist import JointDist3, SctError
from .fileformat import read_dist, serialize_dist, serialize_table
from .measures import Quantity

QUANTITIES = {
    "gk": Quantity.GK, "gk-cond": Quantity.GK_COND, "gk-cond-perz": Quantity.GK_COND_PER_Z,
    "wyner": Quantity.WYNER, "wyner-cond": Quantity.WYNER_COND,
    "intrinsic": Quantity.INTRINSIC, "wyner-intrinsic": Quantity.WYNER_INTRINSIC,
    "sk-cost": Quantity.SK_COST, "bounds": None,
}
MEASURES = ["gk", "gk_cond", "gk_cond_perz", "wyner", "wyner_cond", "intrinsic",
            "wyner_intrinsic", "sk_cost"]
EXAMPLE2_NS = (4, 8, 16, 32)


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{float(v):.9f}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


class Out:
    def __init__(self, json_lines: bool, stream=None):
        self.json_lines = json_lines
        self.stream = stream or sys.stdout

    def record(self, **kv):
        if self.json_lines:
            self.stream.write(json.dumps({k: _jsonable(v) for k, v in kv.items()}) + "\n")
        else:
            self.stream.write(" ".join(f"{k}={_fmt(v)}" for k, v in kv.items()) + "\n")

    def table(self, header, rows):
        if self.json_lines:
            return
        cells = [list(header)] + [[_fmt(c) for c in r] for r in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        for r in cells:
            self.stream.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
        self.stream.write("\n")


def load(ref: str) -> JointDist3:
    """``file:PATH`` or ``catalog:NAME[:N]``."""
    kind, _, rest = ref.partition(":")
    if kind == "file" and rest:
        return read_dist(rest)
    if kind == "catalog" and rest:
        return catalog.get_ref(rest)
    raise UsageError(f"--dist must be file:PATH or catalog:NAME[:N], got {ref!r}")


# ----------------------------------------------------------------- commands

def cmd_compute(args, out: Out) -> int:
    d = load(args.dist)
    q = QUANTITIES[args.quantity]
    if q is None:
        rep = measures.bounds_report(d, restarts=args.restarts, seed=args.seed)
        rows = rep.items()
        out.table(["bound", "value"], rows)
        for k, v in rows:
            out.record(quantity=k, dist=args.dist, value=v, exact=k in ("gk", "gk_cond",
                                                                      "mutual_information",
                                                                      "cond_mutual_information",
                                                                      "zero_comm_rate_conjectured"))
        return 0
    if q is Quantity.INTRINSIC:
        res = measures.intrinsic_information(d, restarts=args.restarts, seed=args.seed)
    elif q in (Quantity.WYNER_INTRINSIC, Quantity.SK_COST):
        res = measures.wyner_intrinsic_ci(d, seed=args.seed, quantity=q,
                                          **({} if args.outer_restarts is None
                                             else {"restarts": args.outer_restarts}))
    elif q is Quantity.WYNER:
        res = measures.wyner_ci(d, tol=args.tol) if args.tol else measures.wyner_ci(d)
    elif q is Quantity.WYNER_COND:
        res = measures.wyner_ci_cond(d, tol=args.tol) if args.tol else measures.wyner_ci_cond(d)
    else:
        res = measures.compute(q, d)
    out.record(quantity=res.quantity.value, dist=args.dist, value=res.value,
               exact=res.certified_exact)
    return 0


def cmd_audit(args, out: Out) -> int:
    d = load(args.dist) if args.dist else catalog.random_dist(args.seed)
    rep = audit.audit_measure(args.measure, d, trials=args.trials, seed=args.seed, tol=args.tol,
                              restarts=args.restarts if args.measure == "intrinsic" else None)
    rows = [(t.index, t.move.describe(), t.value_before, t.value_after, t.expected_direction,
             t.verdict) for t in rep.trials]
    out.table(["trial", "move", "before", "after", "direction", "verdict"], rows)
    for t in rep.trials:
        out.record(trial=t.index, move=t.move.describe(), before=t.value_before,
                   after=t.value_after, direction=t.expected_direction, verdict=t.verdict)
    out.record(measure=rep.measure.value, trials=len(rep.trials), violations=rep.violation_count,
               inconclusive=rep.inconclusive_count, seed=rep.seed, tol=rep.tol)
    return 0


def cmd_certificate(args, out: Out) -> int:
    d = load(args.dist)
    c = measures.theorem3_certificate(d, restarts=args.restarts, seed=args.seed)
    out.record(dist=args.dist, wyner_intrinsic=c.wyner_intrinsic, intrinsic=c.intrinsic,
               gap=c.gap, per_zbar_residual=f"{c.per_zbar_residual:.3e}",
               q_prime_exists=c.q_prime_exists, equality_holds=c.equality_holds)
    if not args.json_lines:
        m = c.optimal_channel.matrix
        out.stream.write("channel p(zbar|z):\n")
        for row in m:
            out.stream.write("  " + " ".join(f"{v:.6f}" for v in row) + "\n")
    return 0


def _example1(out: Out) -> None:
    rows = []
    for name in ("p1", "p2", "p3", "p5"):
        d = catalog.get(name)
        rows.append((name, gk.conditional_gk_ci(d), gk.conditional_gk_ci_per_z(d)))
    out.table(["dist", "gk_cond", "gk_cond_perz"], rows)
    flags = []
    for name in ("p3", "p4", "p5"):
        r = gk.resolvability_flags(catalog.get(name))
        flags.append((name, r.resolvable, r.conditionally_resolvable))
    out.table(["dist", "resolvable", "cond_resolvable"], flags)
    for name, v, vz in rows:
        out.record(reproduce="example1", dist=f"catalog:{name}", gk_cond=v, gk_cond_perz=vz)
    for name, r, rc in flags:
        out.record(reproduce="example1", dist=f"catalog:{name}", resolvable=r,
                   cond_resolvable=rc)


def _qn_rows(ns):
    rows = []
    for n in ns:
        d = catalog.get("qn", n)
        rows.append((n, gk.conditional_gk_ci(d), 1.0 / math.log2(n)))
    return rows


def _example2(out: Out, restarts: int, seed: int) -> None:
    rows = _qn_rows(EXAMPLE2_NS)
    out.table(["n", "gk_cond", "1/log2(n)"], rows)
    for n, v, ref in rows:
        out.record(reproduce="example2", dist=f"catalog:qn:{n}", gk_cond=v, expected=ref)
    ii = measures.intrinsic_information(catalog.get("qn", 4), restarts=restarts, seed=seed)
    expected = (1 + 0.5 * math.log2(4)) / math.log2(4)
    out.table(["n", "intrinsic", "expected"], [(4, ii.value, expected)])
    out.record(reproduce="example2", dist="catalog:qn:4", intrinsic=ii.value, expected=expected)


def cmd_reproduce(args, out: Out) -> int:
    if args.which == "example1":
        _example1(out)
    else:
        _example2(out, args.restarts, args.seed)
    return 0


def cmd_sweep(args, out: Out) -> int:
    ns = args.n
    for n in ns:
        if n < 3:
            raise catalog.BadParam(f"qn needs n >= 3, got {n}")
    rows = _qn_rows(ns)
    out.table(["n", "gk_cond", "1/log2(n)"], rows)
    for n, v, ref in rows:
        out.record(sweep="qn", n=n, gk_cond=v, expected=ref)
    return 0


def cmd_catalog(args, out: Out) -> int:
    if not args.name:
        rows = [(name, e.summary) for name, e in catalog.ENTRIES.items()]
        rows.append(("random", "Dirichlet(1) 3x3x3 triple, parameter is the seed"))
        out.table(["name", "description"], rows)
        for name, _ in rows:
            out.record(catalog=name)
        return 0
    name, n = catalog.parse_ref(args.name)
    if name == "random":
        text = serialize_dist(catalog.get(name, n), name=args.name.replace(":", "-"))
    else:
        sizes, table = catalog.exact_table(name, n)
        text = serialize_table(sizes, table, name=args.name.replace(":", "-"))
    if out.json_lines:
        out.record(catalog=args.name, text=text)
    else:
        out.stream.write(text)
    return 0


# ------------------------------------------------------------------- parser

def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--restarts", type=int, default=None,
                        help="random restarts for channel searches (default $SCT_RESTARTS or 64)")
    common.add_argument("--outer-restarts", type=int, default=None,
                        help="random restarts of the outer search for wyner-intrinsic")
    common.add_argument("--seed", type=int, default=None, help="base seed (default $SCT_SEED or 0)")
    common.add_argument("--tol", type=float, default=None, help="tolerance (audit band or solver gap)")
    common.add_argument("--json-lines", action="store_true", help="one JSON record per line")

    p = argparse.ArgumentParser(
        prog="sct",
        description="Secrecy and common-information measures of finite tripartite "
                    "distributions.  All logarithms are base 2; the q_n family uses "
                    "1/log2(n).")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="evaluate one quantity")
    c.add_argument("--quantity", required=True, choices=list(QUANTITIES))
    c.add_argument("--dist", required=True, help="file:PATH or catalog:NAME[:N]")
    c.set_defaults(func=cmd_compute)

    a = sub.add_parser("audit", parents=[common], help="random LOPC monotone audit")
    a.add_argument("--measure", required=True, choices=MEASURES)
    a.add_argument("--trials", type=int, default=50)
    a.add_argument("--dist", default=None, help="default: random 3x3x3 from --seed")
    a.set_defaults(func=cmd_audit)

    t = sub.add_parser("certificate", parents=[common], help="equality certificate for "
                       "C_W(X;Y|Z down) = I(X;Y|Z down)")
    t.add_argument("--dist", required=True)
    t.set_defaults(func=cmd_certificate)

    r = sub.add_parser("reproduce", parents=[common], help="tables of the worked examples")
    r.add_argument("which", choices=["example1", "example2"])
    r.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("sweep", parents=[common], help="gk_cond over the q_n family")
    s.add_argument("family", choices=["qn"])
    s.add_argument("--n", type=int, nargs="+", required=True)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("catalog", parents=[common], help="list entries or print one")
    g.add_argument("name", nargs="?", help="NAME or NAME:N")
    g.set_defaults(func=cmd_catalog)
    return p


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout or sys.stdout):
            args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.restarts is None:
            args.restarts = _env_int("SCT_RESTARTS", 64)
        if args.seed is None:
            args.seed = _env_int("SCT_SEED", 0)
        if args.restarts < 0 or (args.outer_restarts is not None and args.outer_restarts < 0):
            raise UsageError("restart counts must be non-negative")
        return args.func(args, Out(args.json_lines, stdout))
    except UsageError as e:
        parser.print_usage(stderr)
        stderr.write(f"sct: error: {e}\n")
        return 2
    except (SctError, ValueError, OSError) as e:
        stderr.write(f"sct: {type(e).__name__}: {e}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())
