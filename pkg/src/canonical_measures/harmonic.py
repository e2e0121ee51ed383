"""Linear potential theory on a compact metric graph.

Vertex potentials and discrete measures are plain ``numpy`` vectors indexed
by vertex.  1-cochains carry their components ``omega_e = omega(e) / l(e)`` in
the stored orientation of each edge, with the length-weighted pairing
``<omega, eta> = sum_e omega_e * eta_e * l(e)``.

The Laplacian of a potential ``f`` is ``dstar(coboundary(f))``: at each vertex
the sum of the incoming slopes of ``f``.  It equals the weighted graph
Laplacian with conductance ``1 / l`` on every edge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapExceededError, InvariantError
from .graph_core import (
    Measure,
    MetricGraph,
    OrientedEdge,
    aggregate_measure,
    bridges,
    is_bridge,
    spanning_tree,
    subdivide,
)

__all__ = [
    "Cochain",
    "coboundary",
    "dstar",
    "laplacian",
    "laplacian_matrix",
    "GroundedLaplacian",
    "j_function",
    "effective_resistance",
    "resistance_between",
    "zhang_measure",
    "zhang_edge_mass",
    "harmonic_projection",
    "cycle_forms",
    "spanning_tree_measure",
]

DENSE_LIMIT = 3000
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Cochain:
    graph: MetricGraph
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.components, dtype=np.float64)
        if c.shape != (self.graph.num_edges,):
            raise ValueError("one component per edge required")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @classmethod
    def zero(cls, g: MetricGraph) -> "Cochain":
        return cls(g, np.zeros(g.num_edges))

    @classmethod
    def from_values(cls, g: MetricGraph, values) -> "Cochain":
        """From the values ``omega(e)`` on the stored orientations."""
        return cls(g, np.asarray(values, dtype=np.float64) / g.lengths)

    @classmethod
    def edge_form(cls, g: MetricGraph, e: OrientedEdge | int) -> "Cochain":
        """The cochain ``de``: value ``l(e)`` on ``e`` and zero elsewhere."""
        return cls.path_form(g, [e if isinstance(e, OrientedEdge) else OrientedEdge(e)])

    @classmethod
    def path_form(cls, g: MetricGraph, walk) -> "Cochain":
        """Sum of ``de`` along a walk of oriented edges."""
        c = np.zeros(g.num_edges)
        for oe in walk:
            c[oe.edge] += -1.0 if oe.reversed else 1.0
        return cls(g, c)

    @property
    def values(self) -> np.ndarray:
        return self.components * self.graph.lengths

    def value(self, oe: OrientedEdge) -> float:
        v = self.components[oe.edge] * self.graph.lengths[oe.edge]
        return float(-v if oe.reversed else v)

    def component(self, oe: OrientedEdge) -> float:
        c = self.components[oe.edge]
        return float(-c if oe.reversed else c)

    def inner(self, other: "Cochain") -> float:
        return float(np.sum(self.components * other.components * self.graph.lengths))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def __add__(self, other):
        return Cochain(self.graph, self.components + other.components)

    def __sub__(self, other):
        return Cochain(self.graph, self.components - other.components)

    def __mul__(self, s):
        return Cochain(self.graph, self.components * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return Cochain(self.graph, -self.components)


def _incidence(g: MetricGraph) -> sp.csr_matrix:
    """Signed edge-vertex incidence: +1 at the head, -1 at the tail (loops vanish)."""
    m = g.num_edges
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([g.heads, g.tails])
    vals = np.concatenate([np.ones(m), -np.ones(m)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, g.num_vertices))


def coboundary(g: MetricGraph, f) -> Cochain:
    f = np.asarray(f, dtype=np.float64)
    return Cochain(g, (f[g.heads] - f[g.tails]) / g.lengths)


def dstar(omega: Cochain) -> np.ndarray:
    """Net inflow of ``omega`` at each vertex: incoming components minus outgoing."""
    return _incidence(omega.graph).T @ omega.components


def laplacian(g: MetricGraph, f) -> np.ndarray:
    return dstar(coboundary(g, f))


def laplacian_matrix(g: MetricGraph, exclude=()) -> sp.csr_matrix:
    """Weighted Laplacian with conductance ``1 / l``, optionally without some edges."""
    B = _incidence(g)
    w = 1.0 / g.lengths
    if len(exclude):
        w = w.copy()
        w[list(exclude)] = 0.0
    return (B.T @ sp.diags(w) @ B).tocsr()


class GroundedLaplacian:
    """Factorization of the Laplacian with the row and column of ``ground`` deleted.

    Small systems use a dense Cholesky factorization; large ones a sparse LU.
    """

    def __init__(self, g: MetricGraph, ground: int = 0, exclude=()):
        self.n = g.num_vertices
        self.ground = int(ground)
        L = laplacian_matrix(g, exclude)
        keep = np.ones(self.n, dtype=bool)
        keep[self.ground] = False
        self._keep = keep
        Lr = L[keep][:, keep]
        self._Lr = Lr
        self._norm = float(abs(Lr).sum(axis=1).max()) if self.n > 1 else 0.0
        self.dense = self.n <= DENSE_LIMIT
        if self.n == 1:
            self._factor = None
        elif self.dense:
            self._factor = la.cho_factor(Lr.toarray(), lower=True)
        else:
            self._factor = spla.splu(Lr.tocsc())

    def _solve_reduced(self, b):
        if self.dense:
            return la.cho_solve(self._factor, b)
        return self._factor.solve(b)

    def solve(self, rhs) -> np.ndarray:
        """Potential ``f`` with ``Lf = rhs`` off the ground and ``f[ground] = 0``."""
        rhs = np.asarray(rhs, dtype=np.float64)
        out = np.zeros((self.n,) + rhs.shape[1:])
        if self.n == 1:
            return out
        b = rhs[self._keep]
        x = self._solve_reduced(b)
        for _ in range(4):
            res, bound = self._residual(x, b)
            if res <= bound:
                break
            x = x + self._solve_reduced(b - self._Lr @ x)
        else:
            raise InvariantError(f"Laplacian solve residual {res:.3e} exceeds {bound:.3e}")
        out[self._keep] = x
        return out

    def _residual(self, x, b):
        # normwise backward error: |Lx - b| <= tol * (|L| |x| + |b|)
        res = np.abs(self._Lr @ x - b).max(initial=0.0)
        bound = RESIDUAL_TOL * (self._norm * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0))
        return res, bound

    def inverse(self) -> np.ndarray:
        """Dense grounded Green's matrix (zero row/column at the ground)."""
        return self.solve(np.eye(self.n))


def j_function(g: MetricGraph, y: int, z: int) -> np.ndarray:
    """Values at every vertex ``x`` of ``j_z(x, y)``.

    The potential has Laplacian ``delta_y - delta_z`` and vanishes at ``z``:
    unit current entering at ``y`` and leaving at the grounded vertex ``z``.
    """
    rhs = np.zeros(g.num_vertices)
    rhs[y] += 1.0
    rhs[z] -= 1.0
    return GroundedLaplacian(g, ground=z).solve(rhs)


def resistance_between(g: MetricGraph, u: int, v: int) -> float:
    """Effective resistance between two vertices of the whole graph."""
    if u == v:
        return 0.0
    return float(j_function(g, u, v)[u])


def _delete_edge(g: MetricGraph, e: int) -> MetricGraph:
    keep = np.arange(g.num_edges) != e
    return MetricGraph(g.num_vertices, g.tails[keep], g.heads[keep], g.lengths[keep],
                       g.labels, validate=False)


def effective_resistance(g: MetricGraph, e: int) -> float:
    """Resistance between the endpoints of ``e`` measured in the graph without ``e``.

    Returns ``inf`` for a bridge.  Loops have no well-defined value here;
    subdivide them first.
    """
    if g.is_loop(e):
        raise ValueError(f"edge {e} is a loop; subdivide it before asking for its resistance")
    if is_bridge(g, e):
        return float("inf")
    u, v = int(g.tails[e]), int(g.heads[e])
    return float(j_function(_delete_edge(g, e), v, u)[v])


def _zhang_by_resistance(g: MetricGraph) -> Measure:
    # model must be loopless: split each loop at its midpoint, then re-aggregate
    h, edge_map = g, {e: (e,) for e in range(g.num_edges)}
    for e in range(g.num_edges):
        if g.is_loop(e):
            h, step = subdivide(h, e, g.length(e) / 2)
            edge_map[e] = edge_map[e] + (step[e][1],)
    mass = np.empty(h.num_edges)
    for e in range(h.num_edges):
        r = effective_resistance(h, e)
        mass[e] = 0.0 if np.isinf(r) else h.length(e) / (r + h.length(e))
    return aggregate_measure(Measure(h, mass), g, edge_map)


def _zhang_by_projection(g: MetricGraph) -> Measure:
    # l/(R+l) = 1 - Reff/l, where Reff is the full-graph resistance across e
    is_br = bridges(g)
    mass = np.zeros(g.num_edges)
    solver = GroundedLaplacian(g)
    u, v = g.tails, g.heads
    if solver.dense:
        G = solver.inverse()
        reff = G[u, u] + G[v, v] - 2 * G[u, v]
    else:
        reff = np.empty(g.num_edges)
        for e in range(g.num_edges):
            reff[e] = _reff_with(solver, g, e)
    mass = np.clip(1.0 - reff / g.lengths, 0.0, 1.0)
    mass[is_br] = 0.0
    return Measure(g, mass)


def _reff_with(solver: GroundedLaplacian, g: MetricGraph, e: int) -> float:
    u, v = int(g.tails[e]), int(g.heads[e])
    if u == v:
        return 0.0
    rhs = np.zeros(g.num_vertices)
    rhs[v] += 1.0
    rhs[u] -= 1.0
    x = solver.solve(rhs)
    return float(x[v] - x[u])


def zhang_measure(g: MetricGraph, method: str = "projection") -> Measure:
    """Zhang's canonical measure: mass ``l(e) / (R(e) + l(e))`` on each edge.

    ``method="resistance"`` follows the definition literally, solving one
    system on the graph minus each edge (loops split at their midpoints).
    ``method="projection"`` factors the Laplacian once and uses
    ``1 - Reff(e) / l(e)``, where ``Reff`` is the resistance across ``e`` in
    the whole graph; the two agree to rounding.  Bridges get exactly zero.
    """
    if method == "projection":
        return _zhang_by_projection(g)
    if method == "resistance":
        return _zhang_by_resistance(g)
    raise ValueError(f"unknown method {method!r}")


def zhang_edge_mass(g: MetricGraph, e: int) -> float:
    """Canonical mass of a single edge, without computing the others."""
    if g.is_loop(e):
        return 1.0
    if is_bridge(g, e):
        return 0.0
    reff = _reff_with(GroundedLaplacian(g, ground=int(g.tails[e])), g, e)
    return float(min(max(1.0 - reff / g.length(e), 0.0), 1.0))


def harmonic_projection(g: MetricGraph, omega: Cochain) -> Cochain:
    """Orthogonal projection onto harmonic forms: ``omega - df`` with ``Lf = d*omega``."""
    f = GroundedLaplacian(g).solve(dstar(omega))
    return omega - coboundary(g, f)


def cycle_forms(g: MetricGraph) -> list[Cochain]:
    """Forms of the fundamental cycles of the BFS spanning tree, one per non-tree edge."""
    tree = spanning_tree(g)
    forms = []
    for e in np.flatnonzero(~tree.in_tree):
        e = int(e)
        u, v = int(g.tails[e]), int(g.heads[e])
        walk = [OrientedEdge(e)] + tree.path(g, v, u)
        forms.append(Cochain.path_form(g, walk))
    return forms


def spanning_tree_measure(g: MetricGraph, cap: int = 16) -> Measure:
    """Brute-force canonical measure: ``1 - P[e in T]`` for the weighted random spanning tree.

    A tree's weight is the product of the conductances ``1 / l`` of its edges.
    Every ``(|V|-1)``-subset of non-loop edges is tested, so the edge count is capped.
    """
    if g.num_edges > cap:
        raise CapExceededError(f"{g.num_edges} edges exceeds the enumeration cap {cap}")
    n = g.num_vertices
    candidates = [e for e in range(g.num_edges) if not g.is_loop(e)]
    cond = 1.0 / g.lengths
    inclusion = np.zeros(g.num_edges)
    total = 0.0
    for subset in itertools.combinations(candidates, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        acyclic = True
        for e in subset:
            a, b = find(int(g.tails[e])), find(int(g.heads[e]))
            if a == b:
                acyclic = False
                break
            parent[a] = b
        if not acyclic:
            continue
        w = float(np.prod(cond[list(subset)]))
        total += w
        inclusion[list(subset)] += w
    return Measure(g, np.clip(1.0 - inclusion / total, 0.0, 1.0))
