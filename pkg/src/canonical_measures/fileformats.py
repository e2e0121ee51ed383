"""Reading and writing graph and voltage files.

Graph text format: one edge per line, ``u v length``; blank lines and text
after ``#`` are ignored.  Graph JSON: ``{"edges": [[u, v, length], ...]}``.

Voltage JSON::

    {"group": {"type": "Z^k mod n", "k": 2, "n": 3}
              | {"type": "table", "mul": [[...], ...]},
     "voltages": {"0": [1, 0], "1": 4, ...}}

Voltages are keyed by edge id; a list is a coefficient vector for the
``Z^k mod n`` group, an integer is an element index.  Missing edges get the
identity.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .covers import FiniteGroup, VoltageCover
from .errors import GraphValidationError
from .graph_core import MetricGraph, build_graph

__all__ = [
    "parse_graph_text",
    "parse_graph_json",
    "read_graph",
    "format_graph_text",
    "graph_to_json",
    "write_graph",
    "parse_voltages",
    "read_voltages",
]


def _number(token: str, lineno: int, what: str, kind=float):
    try:
        return kind(token)
    except ValueError:
        raise GraphValidationError(f"{what} {token!r} is not a valid number", line=lineno) from None


def parse_graph_text(text: str) -> MetricGraph:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphValidationError(f"expected 'u v length', got {len(parts)} fields", line=lineno)
        u = _number(parts[0], lineno, "vertex", int)
        v = _number(parts[1], lineno, "vertex", int)
        length = _number(parts[2], lineno, "length")
        if u < 0 or v < 0:
            raise GraphValidationError("vertex ids must be nonnegative", line=lineno)
        if not np.isfinite(length) or length <= 0:
            raise GraphValidationError(f"edge length must be positive and finite, got {parts[2]}",
                                       line=lineno)
        edges.append((u, v, length))
    return build_graph(edges)


def parse_graph_json(text: str) -> MetricGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphValidationError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict) or not isinstance(data.get("edges"), list):
        raise GraphValidationError('graph JSON must be an object with an "edges" list')
    for i, row in enumerate(data["edges"]):
        if not (isinstance(row, list) and len(row) == 3
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row)):
            raise GraphValidationError(f"edge {i}: expected [u, v, length], got {row!r}")
    return build_graph(data["edges"])


def read_graph(path) -> MetricGraph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphValidationError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        return parse_graph_json(text)
    return parse_graph_text(text)


def format_graph_text(g: MetricGraph) -> str:
    labels = g.labels
    return "".join(f"{labels[u]} {labels[v]} {l!r}\n" for u, v, l in g.edges())


def graph_to_json(g: MetricGraph) -> str:
    labels = g.labels
    return json.dumps({"edges": [[labels[u], labels[v], l] for u, v, l in g.edges()]})


def write_graph(g: MetricGraph, path) -> None:
    path = Path(path)
    path.write_text(graph_to_json(g) if path.suffix.lower() == ".json" else format_graph_text(g))


def _group(spec) -> FiniteGroup:
    if not isinstance(spec, dict) or "type" not in spec:
        raise GraphValidationError('voltage file needs a "group" object with a "type"')
    kind = spec["type"]
    if kind == "Z^k mod n":
        try:
            k, n = int(spec["k"]), int(spec["n"])
        except (KeyError, TypeError, ValueError):
            raise GraphValidationError('"Z^k mod n" group needs integer "k" and "n"') from None
        if k < 0 or n < 1:
            raise GraphValidationError("group needs k >= 0 and n >= 1")
        return FiniteGroup.cyclic_power(n, k)
    if kind == "table":
        try:
            mul = np.asarray(spec["mul"], dtype=np.int64)
        except (KeyError, TypeError, ValueError):
            raise GraphValidationError('"table" group needs an integer "mul" table') from None
        return FiniteGroup(mul)
    raise GraphValidationError(f"unknown group type {kind!r}")


def parse_voltages(g: MetricGraph, text: str) -> VoltageCover:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphValidationError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise GraphValidationError("voltage file must be a JSON object")
    grp = _group(data.get("group"))
    raw = data.get("voltages", {})
    if not isinstance(raw, dict):
        raise GraphValidationError('"voltages" must map edge ids to group elements')
    volt = np.full(g.num_edges, grp.identity, dtype=np.int64)
    for key, val in raw.items():
        try:
            e = int(key)
        except ValueError:
            raise GraphValidationError(f"edge id {key!r} is not an integer") from None
        if not 0 <= e < g.num_edges:
            raise GraphValidationError(f"edge id {e} out of range (graph has {g.num_edges} edges)")
        if isinstance(val, list):
            if grp.cyclic_shape is None or len(val) != grp.cyclic_shape[1]:
                raise GraphValidationError(f"edge {e}: coefficient vector does not match the group")
            volt[e] = grp.encode(val)
        elif isinstance(val, int) and not isinstance(val, bool):
            if not 0 <= val < grp.order:
                raise GraphValidationError(f"edge {e}: element {val} outside group of order {grp.order}")
            volt[e] = val
        else:
            raise GraphValidationError(f"edge {e}: voltage must be a list or an integer")
    return VoltageCover(g, grp, volt)


def read_voltages(g: MetricGraph, path) -> VoltageCover:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphValidationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_voltages(g, text)
