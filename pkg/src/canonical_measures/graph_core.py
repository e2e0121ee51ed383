"""Finite weighted multigraph models of compact metric graphs.

A :class:`MetricGraph` is immutable once built.  Vertices are dense integer
ids ``0..n-1``; edge ``i`` runs from ``tails[i]`` to ``heads[i]`` and has a
positive finite length.  Loops and parallel edges are allowed.

Oriented edges are encoded as :class:`OrientedEdge` pairs ``(edge, reversed)``
and, where arrays are involved, by the integer index ``2 * edge + reversed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphValidationError

__all__ = [
    "OrientedEdge",
    "MetricGraph",
    "Measure",
    "BridgeInfo",
    "Contraction",
    "NBDigraph",
    "build_graph",
    "subdivide",
    "contract",
    "genus",
    "is_bridge",
    "bridges",
    "nb_digraph",
    "nb_reachable_cycles",
    "nb_cycle_counts",
    "aggregate_measure",
    "SpanningTree",
    "spanning_tree",
]


class OrientedEdge(NamedTuple):
    edge: int
    reversed: bool = False

    def reverse(self) -> "OrientedEdge":
        return OrientedEdge(self.edge, not self.reversed)

    @property
    def index(self) -> int:
        return 2 * self.edge + int(self.reversed)

    @classmethod
    def from_index(cls, index: int) -> "OrientedEdge":
        return cls(int(index) // 2, bool(index % 2))


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class MetricGraph:
    """Immutable connected weighted multigraph.

    ``labels`` keeps the user's original vertex names so files round-trip;
    all computation uses the dense ids.
    """

    __slots__ = ("_n", "_tails", "_heads", "_lengths", "_labels", "_out")

    def __init__(self, num_vertices: int, tails, heads, lengths,
                 labels: Sequence[int] | None = None, validate: bool = True):
        self._n = int(num_vertices)
        self._tails = _frozen(tails, np.int64)
        self._heads = _frozen(heads, np.int64)
        self._lengths = _frozen(lengths, np.float64)
        if labels is None:
            labels = range(self._n)
        self._labels = tuple(int(x) for x in labels)
        self._out = None
        if validate:
            self._validate()

    def _validate(self):
        m = len(self._tails)
        if self._n < 1:
            raise GraphValidationError("graph needs at least one vertex")
        if len(self._heads) != m or len(self._lengths) != m:
            raise GraphValidationError("tails, heads and lengths differ in size")
        if len(self._labels) != self._n:
            raise GraphValidationError("one label per vertex required")
        if m and (self._tails.min() < 0 or self._heads.min() < 0
                  or max(self._tails.max(), self._heads.max()) >= self._n):
            raise GraphValidationError("edge endpoint out of range")
        bad = ~np.isfinite(self._lengths) | (self._lengths <= 0)
        if bad.any():
            e = int(np.flatnonzero(bad)[0])
            raise GraphValidationError(
                f"edge {e} has nonpositive or non-finite length {self._lengths[e]!r}")
        if self._n > 1:
            adj = csr_matrix((np.ones(m), (self._tails, self._heads)),
                             shape=(self._n, self._n))
            ncomp, _ = connected_components(adj, directed=False)
            if ncomp != 1:
                raise GraphValidationError(f"graph is disconnected ({ncomp} components)")

    # -- basic accessors -------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return self._n

    @property
    def num_edges(self) -> int:
        return len(self._tails)

    @property
    def tails(self) -> np.ndarray:
        return self._tails

    @property
    def heads(self) -> np.ndarray:
        return self._heads

    @property
    def lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def labels(self) -> tuple[int, ...]:
        return self._labels

    def edge(self, e: int) -> tuple[int, int, float]:
        return int(self._tails[e]), int(self._heads[e]), float(self._lengths[e])

    def edges(self) -> list[tuple[int, int, float]]:
        return [self.edge(e) for e in range(self.num_edges)]

    def is_loop(self, e: int) -> bool:
        return bool(self._tails[e] == self._heads[e])

    def tail(self, oe: OrientedEdge) -> int:
        return int(self._heads[oe.edge] if oe.reversed else self._tails[oe.edge])

    def head(self, oe: OrientedEdge) -> int:
        return int(self._tails[oe.edge] if oe.reversed else self._heads[oe.edge])

    def length(self, oe: OrientedEdge | int) -> float:
        e = oe.edge if isinstance(oe, OrientedEdge) else oe
        return float(self._lengths[e])

    def oriented_edges(self) -> list[OrientedEdge]:
        return [OrientedEdge.from_index(i) for i in range(2 * self.num_edges)]

    def oriented_tails(self) -> np.ndarray:
        """Tail vertex of every oriented edge, indexed by ``OrientedEdge.index``."""
        out = np.empty(2 * self.num_edges, dtype=np.int64)
        out[0::2] = self._tails
        out[1::2] = self._heads
        return out

    def oriented_heads(self) -> np.ndarray:
        out = np.empty(2 * self.num_edges, dtype=np.int64)
        out[0::2] = self._heads
        out[1::2] = self._tails
        return out

    def out_edges(self, v: int) -> list[OrientedEdge]:
        """Oriented edges with tail ``v``; a loop at ``v`` contributes both orientations."""
        if self._out is None:
            table = [[] for _ in range(self._n)]
            for i, t in enumerate(self.oriented_tails()):
                table[t].append(OrientedEdge.from_index(i))
            self._out = tuple(tuple(x) for x in table)
        return list(self._out[v])

    def degree(self, v: int) -> int:
        return len(self.out_edges(v))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.oriented_tails(), minlength=self._n)

    def scaled(self, factor: float) -> "MetricGraph":
        return MetricGraph(self._n, self._tails, self._heads, self._lengths * factor,
                           self._labels, validate=False)

    def __eq__(self, other):
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return (self._n == other._n and self._labels == other._labels
                and np.array_equal(self._tails, other._tails)
                and np.array_equal(self._heads, other._heads)
                and np.array_equal(self._lengths, other._lengths))

    def __hash__(self):
        return hash((self._n, self._tails.tobytes(), self._heads.tobytes(),
                     self._lengths.tobytes()))

    def __repr__(self):
        return f"MetricGraph(|V|={self._n}, |E|={self.num_edges}, genus={genus(self)})"


@dataclass(frozen=True, eq=False)
class Measure:
    """Piecewise Lebesgue measure given by its total mass on each edge."""

    graph: MetricGraph
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        mass = np.array(self.mass, dtype=np.float64)
        if mass.shape != (self.graph.num_edges,):
            raise ValueError("one mass per edge required")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ValueError("masses must be finite and nonnegative")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    def __getitem__(self, e: int) -> float:
        return float(self.mass[e])

    def __len__(self):
        return len(self.mass)

    def total(self) -> float:
        return float(np.sum(self.mass))

    def density(self) -> np.ndarray:
        return self.mass / self.graph.lengths

    @classmethod
    def lebesgue(cls, g: MetricGraph) -> "Measure":
        return cls(g, g.lengths.copy())

    @classmethod
    def zero(cls, g: MetricGraph) -> "Measure":
        return cls(g, np.zeros(g.num_edges))


EdgeMap = dict  # old edge id -> tuple of new edge ids


def aggregate_measure(m: Measure, coarse: MetricGraph, edge_map: EdgeMap) -> Measure:
    """Sum masses of a refined measure back onto the coarse edges it came from."""
    out = np.zeros(coarse.num_edges)
    for e, pieces in edge_map.items():
        out[e] = sum(m.mass[p] for p in pieces)
    return Measure(coarse, out)


def build_graph(edge_list: Iterable[Sequence]) -> MetricGraph:
    """Build a graph from ``(u, v, length)`` triples.

    Vertex labels are arbitrary nonnegative integers; they are mapped to dense
    ids in sorted order, so already-dense labels are kept as they are.  Edge
    ids follow input order.
    """
    rows = [tuple(r) for r in edge_list]
    if not rows:
        raise GraphValidationError("empty edge list")
    us, vs, ls = [], [], []
    for i, r in enumerate(rows):
        if len(r) != 3:
            raise GraphValidationError(f"edge {i}: expected (u, v, length), got {r!r}")
        u, v, length = r
        if int(u) != u or int(v) != v or u < 0 or v < 0:
            raise GraphValidationError(f"edge {i}: vertices must be nonnegative integers")
        length = float(length)
        if not np.isfinite(length) or length <= 0:
            raise GraphValidationError(f"edge {i}: nonpositive or non-finite length {length!r}")
        us.append(int(u))
        vs.append(int(v))
        ls.append(length)
    labels = sorted(set(us) | set(vs))
    dense = {lab: i for i, lab in enumerate(labels)}
    return MetricGraph(len(labels), [dense[u] for u in us], [dense[v] for v in vs], ls,
                       labels=labels)


def subdivide(g: MetricGraph, e: int, t: float) -> tuple[MetricGraph, EdgeMap]:
    """Insert a vertex at distance ``t`` from the tail of edge ``e``.

    Edge ``e`` keeps its id and becomes the first piece (length ``t``); the
    second piece is appended as the last edge and the new vertex gets id
    ``num_vertices``.  The returned map sends each old edge to its pieces.
    """
    length = g.length(e)
    if not 0 < t < length:
        raise ValueError(f"subdivision point {t} not in the open interval (0, {length})")
    w = g.num_vertices
    tails = np.append(g.tails, w)
    heads = np.append(g.heads, g.heads[e])
    heads[e] = w
    lengths = np.append(g.lengths, length - t)
    lengths[e] = t
    label = max(g.labels) + 1
    new = MetricGraph(w + 1, tails, heads, lengths, labels=g.labels + (label,),
                      validate=False)
    edge_map = {i: (i,) for i in range(g.num_edges)}
    edge_map[e] = (e, g.num_edges)
    return new, edge_map


@dataclass(frozen=True)
class Contraction:
    graph: MetricGraph
    vertex_map: np.ndarray  # old vertex -> new vertex
    edge_map: dict  # old edge -> new edge, or None if collapsed
    point: int  # id of the collapsed vertex p_A


def contract(g: MetricGraph, vertices: Iterable[int] = (), edges: Iterable[int] = ()) -> Contraction:
    """Collapse the closed subgraph spanned by ``vertices`` and ``edges`` to one point.

    All of the subgraph becomes a single vertex even when it is disconnected.
    Edges outside the subgraph keep their lengths and relative order; an edge
    whose endpoints both land in the subgraph becomes a loop and is kept.
    """
    edges = np.unique(np.fromiter(edges, dtype=np.int64))
    if len(edges) and (edges.min() < 0 or edges.max() >= g.num_edges):
        raise GraphValidationError("subgraph edge out of range")
    inside = np.zeros(g.num_vertices, dtype=bool)
    vs = np.fromiter(vertices, dtype=np.int64)
    if len(vs) and (vs.min() < 0 or vs.max() >= g.num_vertices):
        raise GraphValidationError("subgraph vertex out of range")
    inside[vs] = True
    inside[g.tails[edges]] = True
    inside[g.heads[edges]] = True
    if not inside.any():
        raise GraphValidationError("empty subgraph")

    point_old = int(np.flatnonzero(inside)[0])
    keep = ~inside
    keep[point_old] = True
    new_id = np.cumsum(keep) - 1
    vertex_map = np.where(inside, new_id[point_old], new_id)
    n_new = int(keep.sum())

    remaining = np.ones(g.num_edges, dtype=bool)
    remaining[edges] = False
    idx = np.flatnonzero(remaining)
    labels = tuple(np.asarray(g.labels)[keep])
    new = MetricGraph(n_new, vertex_map[g.tails[idx]], vertex_map[g.heads[idx]],
                      g.lengths[idx], labels=labels, validate=False)
    edge_map = {int(e): None for e in edges}
    edge_map.update({int(e): i for i, e in enumerate(idx)})
    vertex_map.setflags(write=False)
    return Contraction(new, vertex_map, edge_map, int(new_id[point_old]))


def genus(g: MetricGraph) -> int:
    return g.num_edges - g.num_vertices + 1


@dataclass(frozen=True)
class BridgeInfo:
    is_bridge: bool
    tail_side: frozenset = frozenset()  # vertices of the component containing the tail
    head_side: frozenset = frozenset()

    def __bool__(self):
        return self.is_bridge


def _components_without(g: MetricGraph, removed: np.ndarray):
    keep = np.ones(g.num_edges, dtype=bool)
    keep[removed] = False
    adj = csr_matrix((np.ones(int(keep.sum())), (g.tails[keep], g.heads[keep])),
                     shape=(g.num_vertices, g.num_vertices))
    return connected_components(adj, directed=False)


def is_bridge(g: MetricGraph, e: int) -> BridgeInfo:
    """Whether removing edge ``e`` disconnects ``g``; if so, the two sides."""
    if g.is_loop(e):
        return BridgeInfo(False)
    _, comp = _components_without(g, np.array([e]))
    u, v = g.tails[e], g.heads[e]
    if comp[u] == comp[v]:
        return BridgeInfo(False)
    return BridgeInfo(True, frozenset(np.flatnonzero(comp == comp[u]).tolist()),
                      frozenset(np.flatnonzero(comp == comp[v]).tolist()))


def bridges(g: MetricGraph) -> np.ndarray:
    """Boolean mask of bridge edges (iterative lowlink DFS, parallel-edge aware)."""
    n = g.num_vertices
    out = [[] for _ in range(n)]
    for e in range(g.num_edges):
        u, v = int(g.tails[e]), int(g.heads[e])
        if u != v:
            out[u].append((v, e))
            out[v].append((u, e))
    disc = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    mask = np.zeros(g.num_edges, dtype=bool)
    clock = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = clock
        clock += 1
        stack = [(root, -1, iter(out[root]))]
        while stack:
            v, via, it = stack[-1]
            for w, e in it:
                if e == via:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, e, iter(out[w])))
                    break
                low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        mask[via] = True
    return mask


class NBDigraph:
    """Non-backtracking digraph: nodes are oriented edges (by index).

    There is an arc ``e -> f`` whenever ``tail(f) == head(e)`` and ``f`` is not
    the reverse of ``e``.
    """

    def __init__(self, g: MetricGraph):
        self.graph = g
        m2 = 2 * g.num_edges
        tails = g.oriented_tails()
        heads = g.oriented_heads()
        by_tail = [[] for _ in range(g.num_vertices)]
        for i in range(m2):
            by_tail[tails[i]].append(i)
        src, dst = [], []
        for i in range(m2):
            rev = i ^ 1
            for j in by_tail[heads[i]]:
                if j != rev:
                    src.append(i)
                    dst.append(j)
        self.num_nodes = m2
        self.matrix = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)),
                                 shape=(m2, m2))

    def successors(self, i: int) -> np.ndarray:
        m = self.matrix
        return m.indices[m.indptr[i]:m.indptr[i + 1]]

    def out_degree(self, i: int) -> int:
        return int(self.matrix.indptr[i + 1] - self.matrix.indptr[i])

    def cycle_counts(self) -> np.ndarray:
        """For every node, the number of directed cycles with distinct edge
        sets reachable by a walk of at least one arc, capped at 2."""
        n = self.num_nodes
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        m = self.matrix
        ncomp, label = connected_components(m, directed=True, connection="strong")
        sizes = np.bincount(label, minlength=ncomp)
        src = np.repeat(np.arange(n), np.diff(m.indptr))
        dst = m.indices
        internal = label[src] == label[dst]
        arcs = np.bincount(label[src[internal]], minlength=ncomp)
        # a strongly connected piece with k nodes and exactly k arcs is one cycle
        own = np.where(arcs == 0, 0, np.where(arcs == sizes, 1, 2))

        # a cycle and its reverse share an edge set and count once
        key = {}
        for c in np.flatnonzero(own == 1):
            key[c] = frozenset((np.flatnonzero(label == c) // 2).tolist())

        comp_succ = [set() for _ in range(ncomp)]
        for a, b in zip(label[src[~internal]], label[dst[~internal]]):
            comp_succ[a].add(b)

        # reach[c]: cycle-carrying components reachable from c (inclusive), capped
        reach = [None] * ncomp
        order = _topological_order(ncomp, comp_succ)
        for c in reversed(order):
            if own[c] >= 2:
                reach[c] = _MANY
                continue
            acc = {key[c]} if own[c] == 1 else set()
            for s in comp_succ[c]:
                if reach[s] is _MANY:
                    acc = _MANY
                    break
                acc |= reach[s]
                if len(acc) >= 2:
                    acc = _MANY
                    break
            reach[c] = acc

        counts = np.zeros(n, dtype=np.int64)
        for i in range(n):
            acc = set()
            for j in self.successors(i):
                r = reach[label[j]]
                if r is _MANY:
                    acc = _MANY
                    break
                acc = acc | r
                if len(acc) >= 2:
                    acc = _MANY
                    break
            counts[i] = 2 if acc is _MANY else len(acc)
        return counts


class _Many(frozenset):
    pass


_MANY = _Many()


def _topological_order(n: int, succ: list[set]) -> list[int]:
    indeg = np.zeros(n, dtype=np.int64)
    for s in succ:
        for b in s:
            indeg[b] += 1
    stack = [c for c in range(n) if indeg[c] == 0]
    order = []
    while stack:
        c = stack.pop()
        order.append(c)
        for b in sorted(succ[c]):
            indeg[b] -= 1
            if indeg[b] == 0:
                stack.append(b)
    return order


def nb_digraph(g: MetricGraph) -> NBDigraph:
    return NBDigraph(g)


def nb_cycle_counts(g: MetricGraph) -> np.ndarray:
    """``nb_reachable_cycles`` for every oriented edge, indexed by ``OrientedEdge.index``."""
    return NBDigraph(g).cycle_counts()


def nb_reachable_cycles(g: MetricGraph, e: OrientedEdge) -> int:
    """Distinct directed cycles reachable by non-backtracking continuation of ``e`` (capped at 2).

    0 means the universal-cover subtree beyond a lift of ``e`` is compact,
    1 that it is a recurrent quasi-ray, 2 that it is transient.
    """
    return int(nb_cycle_counts(g)[e.index])


@dataclass(frozen=True)
class SpanningTree:
    """BFS spanning tree rooted at vertex 0 (edge-id order, so deterministic)."""

    in_tree: np.ndarray  # mask over edges
    parent_edge: tuple  # vertex -> OrientedEdge pointing *into* it, None at the root
    depth: np.ndarray

    def path_from_root(self, g: MetricGraph, v: int) -> list[OrientedEdge]:
        path = []
        while self.parent_edge[v] is not None:
            oe = self.parent_edge[v]
            path.append(oe)
            v = g.tail(oe)
        return path[::-1]

    def path(self, g: MetricGraph, u: int, v: int) -> list[OrientedEdge]:
        """Oriented tree path from ``u`` to ``v``."""
        pu = self.path_from_root(g, u)
        pv = self.path_from_root(g, v)
        k = 0
        while k < min(len(pu), len(pv)) and pu[k] == pv[k]:
            k += 1
        return [oe.reverse() for oe in reversed(pu[k:])] + pv[k:]


def spanning_tree(g: MetricGraph) -> SpanningTree:
    in_tree = np.zeros(g.num_edges, dtype=bool)
    parent: list = [None] * g.num_vertices
    depth = np.full(g.num_vertices, -1, dtype=np.int64)
    depth[0] = 0
    queue = [0]
    for v in queue:
        for oe in g.out_edges(v):
            w = g.head(oe)
            if depth[w] < 0:
                depth[w] = depth[v] + 1
                parent[w] = oe
                in_tree[oe.edge] = True
                queue.append(w)
    in_tree.setflags(write=False)
    return SpanningTree(in_tree, tuple(parent), depth)
