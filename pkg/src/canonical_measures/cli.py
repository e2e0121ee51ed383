"""Command-line front end.

Subcommands ``canon``, ``hyperbolic``, ``cover``, ``tower`` and ``check``
each produce a :class:`RunReport`, written as CSV (12 decimals, ``#``
header lines) or JSON (full float precision).  Reports are deterministic:
wall time is only included with ``--timing``.

Exit codes: 0 success, 1 validation error, 2 non-convergence, 3 invariant
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import checks
from .covers import cover_canonical_pushdown, homology_tower, quotient_voltages
from .errors import ConvergenceError, GraphValidationError, InvariantError
from .fileformats import read_graph, read_voltages
from .graph_core import MetricGraph, genus
from .harmonic import zhang_measure
from .hyperbolic import hyperbolic_measure, solve_R, truncated_cover_measure

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_INVARIANT = 0, 1, 2, 3
DECIMALS = 12
TOTAL_TOL = 1e-9


@dataclass
class Column:
    name: str
    kind: str = "fixed"  # fixed | sci | int | str
    total: bool = False


@dataclass
class RunReport:
    command: str
    input_digest: str
    columns: list[Column]
    rows: list[list] = field(default_factory=list)
    summary: dict = field(default_factory=dict)  # residuals, iteration counts, checks
    notes: list[str] = field(default_factory=list)
    group_by: str | None = None  # totals are taken per value of this column
    wall_time: float | None = None
    ok: bool = True

    def _format(self, value, kind) -> str:
        if value is None:
            return ""
        if kind == "str":
            return str(value)
        if kind == "int":
            return str(int(value))
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if kind == "sci":
            return f"{value:.6e}"
        return f"{value:.{DECIMALS}f}"

    def formatted_rows(self) -> list[list[str]]:
        return [[self._format(v, c.kind) for v, c in zip(row, self.columns)] for row in self.rows]

    def _groups(self):
        if self.group_by is None:
            return [(None, list(range(len(self.rows))))]
        k = [c.name for c in self.columns].index(self.group_by)
        keys = list(dict.fromkeys(row[k] for row in self.rows))
        return [(key, [i for i, row in enumerate(self.rows) if row[k] == key]) for key in keys]

    def printed_totals(self) -> dict[str, str]:
        """Column totals summed exactly from the printed 12-decimal values."""
        fmt = self.formatted_rows()
        out = {}
        for key, idx in self._groups():
            suffix = "" if key is None else f"[{self.group_by}={key}]"
            for j, c in enumerate(self.columns):
                if c.total:
                    s = sum((Decimal(fmt[i][j]) for i in idx if fmt[i][j]), Decimal(0))
                    out[f"total.{c.name}{suffix}"] = f"{s:.{DECIMALS}f}"
        return out

    def exact_totals(self) -> dict[str, float]:
        out = {}
        for key, idx in self._groups():
            suffix = "" if key is None else f"[{self.group_by}={key}]"
            for j, c in enumerate(self.columns):
                if c.total:
                    vals = [float(self.rows[i][j]) for i in idx if self.rows[i][j] is not None]
                    out[f"total.{c.name}{suffix}"] = math.fsum(vals)
        return out

    def _header(self) -> list[tuple[str, object]]:
        head = [("command", self.command), ("input", self.input_digest)]
        head += list(self.summary.items())
        if self.wall_time is not None:
            head.append(("wall_time_s", self.wall_time))
        return head

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self._header():
            buf.write(f"# {key}: {_scalar_text(val)}\n")
        for key, val in self.printed_totals().items():
            buf.write(f"# {key}: {val}\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([c.name for c in self.columns])
        w.writerows(self.formatted_rows())
        return buf.getvalue()

    def to_json(self) -> str:
        data = dict(self._header())
        data["columns"] = [c.name for c in self.columns]
        data["rows"] = [[_json_value(v) for v in row] for row in self.rows]
        data["totals"] = {k: _json_value(v) for k, v in self.exact_totals().items()}
        data["notes"] = self.notes
        data = {k: _json_value(v) for k, v in data.items()}
        return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _scalar_text(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(hashlib.sha256(p).digest())
    return "sha256:" + h.hexdigest()


def _file_digest(*paths) -> str:
    try:
        return _digest(*(Path(p).read_bytes() for p in paths))
    except OSError as exc:
        raise GraphValidationError(f"cannot read {exc.filename}: {exc.strerror}") from None


def _edge_columns(extra: list[Column]) -> list[Column]:
    return [Column("edge", "int"), Column("u", "int"), Column("v", "int"),
            Column("length", total=True)] + extra


def _edge_prefix(g: MetricGraph, e: int) -> list:
    u, v, l = g.edge(e)
    return [e, g.labels[u], g.labels[v], l]


# -- commands ----------------------------------------------------------------

def cmd_canon(args) -> RunReport:
    g = read_graph(args.graph)
    mu = zhang_measure(g)
    k = genus(g)
    rep = RunReport("canon", _file_digest(args.graph),
                    _edge_columns([Column("mass", total=True), Column("density")]))
    rep.rows = [_edge_prefix(g, e) + [mu.mass[e], mu.density()[e]] for e in range(g.num_edges)]
    residual = abs(mu.total() - k)
    rep.summary.update({"vertices": g.num_vertices, "edges": g.num_edges, "genus": k,
                        "expected_total": float(k), "total_residual": residual})
    rep.ok = residual <= TOTAL_TOL
    return rep


def cmd_hyperbolic(args) -> RunReport:
    g = read_graph(args.graph)
    k = genus(g)
    if k == 0:
        raise GraphValidationError("hyperbolic measure needs genus >= 1; the graph is a tree")
    cols = [Column("R_forward"), Column("R_backward"), Column("mass", total=True), Column("density")]
    if args.check_truncation is not None:
        cols += [Column("truncated_mass"), Column("truncation_gap", "sci")]
    rep = RunReport("hyperbolic", _file_digest(args.graph), _edge_columns(cols))
    if k == 1:
        Rv = np.full(2 * g.num_edges, math.inf)
        mu = hyperbolic_measure(g)
        rep.summary.update({"iterations": 0, "newton_steps": 0, "fixed_point_residual": 0.0})
        rep.notes.append("genus 1: every resistance is infinite and the measure vanishes")
    else:
        R = solve_R(g, tol=args.tol, max_iter=args.max_iter)
        Rv = R.values
        mu = hyperbolic_measure(g, R)
        rep.summary.update({"iterations": R.iterations, "newton_steps": R.newton_steps,
                            "fixed_point_residual": R.residual})
    for e in range(g.num_edges):
        row = _edge_prefix(g, e) + [Rv[2 * e], Rv[2 * e + 1], mu.mass[e], mu.density()[e]]
        if args.check_truncation is not None:
            if k < 2:
                row += [None, None]
            else:
                t = truncated_cover_measure(g, e, args.check_truncation, node_cap=args.node_cap)
                row += [t, t - mu.mass[e]]
        rep.rows.append(row)
    residual = abs(mu.total() - (k - 1))
    rep.summary.update({"vertices": g.num_vertices, "edges": g.num_edges, "genus": k,
                        "expected_total": float(k - 1), "total_residual": residual})
    if args.check_truncation is not None:
        rep.summary["truncation_depth"] = args.check_truncation
    rep.ok = residual <= 1e-8
    return rep


def cmd_cover(args) -> RunReport:
    g = read_graph(args.graph)
    v = read_voltages(g, args.voltages)
    if not v.generates():
        raise GraphValidationError("voltages do not generate the group, so the cover is disconnected")
    mu = cover_canonical_pushdown(v, tol=TOTAL_TOL)
    k, d = genus(g), v.degree
    rep = RunReport("cover", _file_digest(args.graph, args.voltages),
                    _edge_columns([Column("mass", total=True), Column("density")]))
    rep.rows = [_edge_prefix(g, e) + [mu.mass[e], mu.density()[e]] for e in range(g.num_edges)]
    expected = k - 1 + 1 / d
    rep.summary.update({"genus": k, "degree": d, "group": repr(v.group),
                        "expected_total": expected, "total_residual": abs(mu.total() - expected)})
    return rep


def _rose_limit(g: MetricGraph, coeffs) -> np.ndarray | None:
    """Per-loop limit of a rose tower whose voltages are distinct basis vectors or zero.

    Loops with zero voltage lift to loops (mass 1); the others span a ``Z^k``
    grid, where each edge has mass ``1 - 1/k`` when they all have one length.
    """
    if g.num_vertices != 1:
        return None
    coeffs = np.abs(np.asarray(coeffs, dtype=np.int64))
    nonzero = coeffs.any(axis=1)
    basis = coeffs[nonzero]
    k = coeffs.shape[1]
    ones = np.ones(k, dtype=np.int64)
    if (len(basis) != k or k == 0 or basis.max() != 1
            or not np.array_equal(basis.sum(axis=0), ones) or not np.array_equal(basis.sum(axis=1), ones)):
        return None
    if np.ptp(g.lengths[nonzero]) != 0:
        return None
    return np.where(nonzero, 1.0 - 1.0 / k, 1.0)


def _tower_coefficients(g: MetricGraph, args):
    if args.family == "homology":
        v = homology_tower(g, 2)
        return [list(v.group.decode(a)) for a in v.voltage]
    if args.family == "quotient":
        if args.voltages is None:
            raise GraphValidationError("the quotient family needs --voltages FILE")
        try:
            spec = json.loads(Path(args.voltages).read_text())
        except json.JSONDecodeError as exc:
            raise GraphValidationError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
        raw = spec.get("voltages", {}) if isinstance(spec, dict) else None
        if not isinstance(raw, dict) or not all(isinstance(x, list) for x in raw.values()):
            raise GraphValidationError("quotient voltages must be integer coefficient vectors")
        lengths = {len(x) for x in raw.values()}
        if len(lengths) != 1:
            raise GraphValidationError("quotient voltages must all have the same rank")
        rank = lengths.pop()
        coeffs = [[0] * rank for _ in range(g.num_edges)]
        for key, vec in raw.items():
            e = int(key)
            if not 0 <= e < g.num_edges:
                raise GraphValidationError(f"edge id {e} out of range")
            if not all(isinstance(c, int) for c in vec):
                raise GraphValidationError(f"edge {e}: coefficients must be integers")
            coeffs[e] = vec
        return coeffs
    raise GraphValidationError(f"unsupported tower family {args.family!r}")


def cmd_tower(args) -> RunReport:
    g = read_graph(args.graph)
    if genus(g) == 0:
        raise GraphValidationError("a tree has no nontrivial covers")
    levels = _parse_levels(args.levels)
    coeffs = _tower_coefficients(g, args)
    limit = _rose_limit(g, coeffs)
    paths = [args.graph] + ([args.voltages] if args.family == "quotient" else [])
    digest = _file_digest(*paths)

    def level(n):
        v = homology_tower(g, n) if args.family == "homology" else quotient_voltages(g, n, coeffs)
        if not v.generates():
            raise GraphValidationError(f"level {n}: voltages do not generate the group")
        return v.degree, cover_canonical_pushdown(v, tol=TOTAL_TOL)

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(level, levels))

    cols = [Column("level", "int"), Column("degree", "int")] + _edge_columns([Column("mass", total=True)])
    if limit is not None:
        cols += [Column("limit"), Column("distance_to_limit")]
    rep = RunReport("tower", digest, cols, group_by="level")
    for n, (d, mu) in zip(levels, results):
        for e in range(g.num_edges):
            row = [n, d] + _edge_prefix(g, e) + [mu.mass[e]]
            if limit is not None:
                row += [limit[e], abs(mu.mass[e] - limit[e])]
            rep.rows.append(row)
    rep.summary.update({"family": args.family, "levels": ",".join(map(str, levels)), "genus": genus(g)})
    if limit is None:
        rep.notes.append("limit measure not known in closed form for this tower; distance column omitted")
    return rep


def cmd_check(args) -> RunReport:
    if args.graph is not None:
        graphs = [read_graph(args.graph)]
        digest = _file_digest(args.graph)
        seed = args.seed
    else:
        if args.random is None:
            raise GraphValidationError("give a graph file or --random N")
        graphs = checks.random_corpus(args.random, args.max_edges, args.seed)
        digest = _digest(f"random N={args.random} max_edges={args.max_edges} seed={args.seed}".encode())
        seed = args.seed
    results = checks.run_suite(graphs, seed=seed, workers=args.workers)
    rep = RunReport("check", digest, [Column("invariant", "str"), Column("cases", "int"),
                                      Column("worst", "sci"), Column("tolerance", "sci"),
                                      Column("status", "str")])
    rep.rows = [[r.name, r.cases, r.worst, r.tolerance, "pass" if r.passed else "FAIL"] for r in results]
    failed = [r.name for r in results if not r.passed]
    rep.summary.update({"graphs": len(graphs), "failed": len(failed)})
    rep.ok = not failed
    return rep


def _parse_levels(text: str) -> list[int]:
    try:
        levels = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise GraphValidationError(f"bad --levels {text!r}; expected integers like 2,4,8") from None
    if not levels or min(levels) < 2:
        raise GraphValidationError("tower levels must be integers >= 2")
    return levels


# -- entry point ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are validation errors, not non-convergence
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="canonical-measures",
                description="Canonical measures on metric graphs, their covers and universal cover.")
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the report here (.json or .csv)")
    common.add_argument("--format", choices=["csv", "json"], help="stdout format (default csv)")
    common.add_argument("--timing", action="store_true", help="include wall time in the report")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("canon", parents=[common], help="Zhang canonical measure")
    s.add_argument("graph")
    s.set_defaults(func=cmd_canon)

    s = sub.add_parser("hyperbolic", parents=[common], help="measure induced by the universal cover")
    s.add_argument("graph")
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--max-iter", type=int, default=10 ** 6)
    s.add_argument("--check-truncation", type=int, metavar="DEPTH",
                   help="also compute wired-ball estimates at this depth")
    s.add_argument("--node-cap", type=int, default=10 ** 7, help="size cap for wired balls")
    s.set_defaults(func=cmd_hyperbolic)

    s = sub.add_parser("cover", parents=[common], help="pushdown from a finite voltage cover")
    s.add_argument("graph")
    s.add_argument("voltages")
    s.set_defaults(func=cmd_cover)

    s = sub.add_parser("tower", parents=[common], help="pushdowns along a tower of covers")
    s.add_argument("graph")
    s.add_argument("--family", default="homology",
                   help="homology (mod-n homology covers) or quotient (Z^k voltages from --voltages)")
    s.add_argument("--voltages", help="Z^k coefficient voltages for the quotient family")
    s.add_argument("--levels", default="2,4,8,16")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_tower)

    s = sub.add_parser("check", parents=[common], help="run the invariant suite")
    s.add_argument("graph", nargs="?")
    s.add_argument("--random", type=int, metavar="N")
    s.add_argument("--max-edges", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_check)
    return p


def _emit(rep: RunReport, args) -> None:
    fmt = args.format or "csv"
    if args.out:
        suffix = Path(args.out).suffix.lower()
        if suffix not in (".json", ".csv"):
            raise GraphValidationError(f"cannot infer report format from {args.out!r}; use .json or .csv")
        fmt = suffix[1:]
    text = rep.to_json() if fmt == "json" else rep.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        rep = args.func(args)
        if args.timing:
            rep.wall_time = time.perf_counter() - start
        _emit(rep, args)
    except (GraphValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error: {exc} (residual {exc.residual}, iterations {exc.iterations})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK if rep.ok else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
