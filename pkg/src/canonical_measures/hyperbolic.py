"""Canonical measure induced on a compact graph by its universal cover.

For an oriented edge ``e`` let ``R(e)`` be the resistance from the head of a
lift of ``e`` to infinity inside the subtree beyond it (``inf`` when that
subtree is compact or recurrent).  ``R`` is the least positive solution of

    1 / R(e) = sum over f in S_e of 1 / (l(f) + R(f)),

where ``S_e`` are the non-backtracking continuations of ``e``.  The induced
measure has mass ``l / (R(e) + R(reverse e) + l)`` on ``e``.

Infinite resistances are represented by ``math.inf`` and never enter a sum:
a continuation with ``R = inf`` contributes ``1 / (l + inf) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapExceededError, ConvergenceError, GraphValidationError, InvariantError
from .graph_core import (
    Measure,
    MetricGraph,
    NBDigraph,
    OrientedEdge,
    contract,
    genus,
)
from .harmonic import zhang_edge_mass

__all__ = [
    "ResistanceMap",
    "solve_R",
    "hyperbolic_measure",
    "truncated_cover_measure",
    "wired_ball",
    "BoundaryCylinder",
    "boundary_measure",
    "PJCheck",
    "pj_identity_check",
]

INF = math.inf


@dataclass(frozen=True, eq=False)
class ResistanceMap:
    graph: MetricGraph
    values: np.ndarray = field(repr=False)  # indexed by OrientedEdge.index
    residual: float
    iterations: int
    newton_steps: int = 0
    unique: bool | None = None  # None when not checked

    def __getitem__(self, oe: OrientedEdge | int) -> float:
        i = oe.index if isinstance(oe, OrientedEdge) else int(oe)
        return float(self.values[i])

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def circuit(self, e: int) -> float:
        """``R(e) + R(reverse e)``, the resistance of the cover with the lift of ``e`` cut out."""
        return float(self.values[2 * e] + self.values[2 * e + 1])


def _oriented_lengths(g: MetricGraph) -> np.ndarray:
    return np.repeat(g.lengths, 2)


class _System:
    """The map ``x -> [sum_{S_e} 1/(l + x)]^-1`` restricted to transient oriented edges."""

    def __init__(self, g: MetricGraph):
        nb = NBDigraph(g)
        self.counts = nb.cycle_counts()
        self.active = np.flatnonzero(self.counts >= 2)
        pos = np.full(nb.num_nodes, -1)
        pos[self.active] = np.arange(len(self.active))
        sub = nb.matrix[self.active][:, self.active].astype(np.float64)
        self.A = sub.tocsr()
        self.lengths = _oriented_lengths(g)[self.active]
        if len(self.active) and np.any(np.diff(self.A.indptr) == 0):
            raise InvariantError("a transient oriented edge has no transient continuation")

    def apply(self, x):
        return 1.0 / (self.A @ (1.0 / (self.lengths + x)))

    def jacobian(self, x):
        phi = self.apply(x)
        inner = 1.0 / (self.lengths + x) ** 2
        return sp.diags(phi ** 2) @ self.A @ sp.diags(inner)

    def residual(self, x) -> float:
        if not len(x):
            return 0.0
        return float(np.max(np.abs(1.0 / x - self.A @ (1.0 / (self.lengths + x)))))


def _newton(system: _System, x, tol, max_steps=50):
    n = len(x)
    eye = sp.identity(n, format="csr")
    steps = 0
    for steps in range(1, max_steps + 1):
        F = x - system.apply(x)
        J = (eye - system.jacobian(x)).tocsc()
        dx = spla.spsolve(J, F) if n > 1 else np.array([F[0] / J.toarray()[0, 0]])
        t = 1.0
        r0 = np.max(np.abs(F))
        while t > 1e-8:
            cand = x - t * dx
            if np.all(cand > 0) and np.max(np.abs(cand - system.apply(cand))) <= r0:
                break
            t /= 2
        else:
            return x, steps, False
        x = cand
        if np.max(np.abs(t * dx)) <= tol * max(1.0, np.max(np.abs(x))):
            return x, steps, True
    return x, steps, False


def solve_R(g: MetricGraph, tol: float = 1e-12, max_iter: int = 10 ** 6, newton: bool = True,
            newton_switch: float = 1e-7, check_uniqueness: bool = False) -> ResistanceMap:
    """Least positive solution of the universal-cover resistance system.

    Oriented edges whose non-backtracking continuations reach fewer than two
    distinct cycles get ``R = inf`` up front.  The rest start at zero and are
    iterated with the (monotone) map above, which converges to the least
    fixed point from below; once the sup-norm step drops under
    ``newton_switch`` a damped Newton iteration finishes to ``tol``.

    With ``check_uniqueness`` a second Newton run starts from twice the
    solution; ``unique`` records whether it landed on the same point.
    """
    if genus(g) < 2:
        raise GraphValidationError(f"resistance system needs genus >= 2, got {genus(g)}")
    system = _System(g)
    values = np.full(2 * g.num_edges, INF)
    x = np.zeros(len(system.active))
    it = 0
    newton_steps = 0
    converged = False
    if len(x):
        while it < max_iter:
            new = system.apply(x)
            it += 1
            if np.any(new < x - 1e-14 * np.abs(new)):
                raise InvariantError(f"fixed-point iterates decreased at sweep {it}")
            step = np.max(np.abs(new - x))
            x = new
            scale = max(1.0, np.max(np.abs(x)))
            if step <= tol * scale:
                converged = True
                break
            if newton and step <= newton_switch * scale:
                y, k, ok = _newton(system, x, tol)
                newton_steps += k
                if ok and np.all(y >= x - newton_switch * scale):
                    x = y
                    converged = True
                    break
                newton = False  # fall back to plain sweeps
        if not converged:
            raise ConvergenceError(
                f"fixed-point iteration did not converge in {max_iter} sweeps",
                residual=system.residual(x), iterations=it)
    values[system.active] = x
    unique = None
    if check_uniqueness and len(x):
        y, _, ok = _newton(system, 2.0 * x + 1.0, tol, max_steps=200)
        unique = bool(ok and np.max(np.abs(y - x)) <= 1e-8 * max(1.0, np.max(x)))
    values.setflags(write=False)
    return ResistanceMap(g, values, system.residual(x), it, newton_steps, unique)


def hyperbolic_measure(g: MetricGraph, resistance: ResistanceMap | None = None,
                       **solve_kwargs) -> Measure:
    """Pushdown of the universal cover's canonical measure.

    Genus 1 gives the zero measure; genus 0 has no infinite cover.
    """
    k = genus(g)
    if k == 0:
        raise GraphValidationError("a tree has no infinite Galois cover")
    if k == 1:
        return Measure.zero(g)
    R = resistance if resistance is not None else solve_R(g, **solve_kwargs)
    S = R.values[0::2] + R.values[1::2]
    with np.errstate(invalid="ignore"):
        mass = np.where(np.isfinite(S), g.lengths / (S + g.lengths), 0.0)
    return Measure(g, mass)


@dataclass(frozen=True)
class WiredBall:
    graph: MetricGraph  # ball with all boundary vertices identified
    edge: int  # id of the central lift in ``graph``
    ball_vertices: int
    boundary_vertices: int


def _grow(succ: NBDigraph, start: int, root: int, depth: int, lengths, next_id: int, cap: int):
    indptr, indices = succ.matrix.indptr, succ.matrix.indices
    front_oe = np.array([start])
    front_v = np.array([root])
    tails, heads, lens = [], [], []
    for _ in range(depth):
        counts = indptr[front_oe + 1] - indptr[front_oe]
        if counts.sum() == 0:
            return tails, heads, lens, np.array([], dtype=np.int64), next_id
        child = np.concatenate([indices[indptr[i]:indptr[i + 1]] for i in front_oe])
        parent = np.repeat(front_v, counts)
        new_v = next_id + np.arange(len(child))
        next_id += len(child)
        if next_id > cap:
            raise CapExceededError(f"truncated ball exceeds the node cap {cap}")
        tails.append(parent)
        heads.append(new_v)
        lens.append(lengths[child])
        front_oe, front_v = child, new_v
    return tails, heads, lens, front_v, next_id


def wired_ball(g: MetricGraph, e: int, depth: int, node_cap: int = 10 ** 6) -> WiredBall:
    """Ball of combinatorial radius ``depth`` around a lift of ``e`` in the universal cover,
    with every boundary vertex collapsed to a single point.

    The lift runs from vertex 0 to vertex 1 and is edge 0 of the ball; each
    side is grown by non-backtracking continuation.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    nb = NBDigraph(g)
    lengths = _oriented_lengths(g)
    t1, h1, l1, b1, nid = _grow(nb, 2 * e, 1, depth, lengths, 2, node_cap)
    t2, h2, l2, b2, nid = _grow(nb, 2 * e + 1, 0, depth, lengths, nid, node_cap)
    tails = np.concatenate([[0]] + t1 + t2)
    heads = np.concatenate([[1]] + h1 + h2)
    lens = np.concatenate([[g.length(e)]] + l1 + l2)
    ball = MetricGraph(nid, tails, heads, lens, validate=False)
    boundary = np.concatenate([b1, b2])
    if not len(boundary):
        return WiredBall(ball, 0, nid, 0)
    c = contract(ball, vertices=boundary.tolist())
    return WiredBall(c.graph, c.edge_map[0], nid, len(boundary))


def truncated_cover_measure(g: MetricGraph, e: int, depth: int, node_cap: int = 10 ** 6) -> float:
    """Canonical mass of a lift of ``e`` in the wired depth-``depth`` ball.

    By Rayleigh monotonicity the estimates decrease with ``depth`` toward the
    hyperbolic mass of ``e``.
    """
    if genus(g) < 2:
        raise GraphValidationError(f"truncation needs genus >= 2, got {genus(g)}")
    wb = wired_ball(g, e, depth, node_cap)
    return zhang_edge_mass(wb.graph, wb.edge)


@dataclass(frozen=True)
class BoundaryCylinder:
    """Ends of the universal cover reached from a lift of ``root`` by first
    following the non-backtracking ``word``."""

    root: int
    word: tuple

    def __init__(self, root: int, word: Sequence[OrientedEdge]):
        object.__setattr__(self, "root", int(root))
        object.__setattr__(self, "word", tuple(OrientedEdge(*oe) for oe in word))


def _check_word(g: MetricGraph, cyl: BoundaryCylinder):
    if not cyl.word:
        raise ValueError("empty cylinder word")
    if g.tail(cyl.word[0]) != cyl.root:
        raise ValueError("cylinder word does not start at the root")
    for a, b in zip(cyl.word, cyl.word[1:]):
        if g.tail(b) != g.head(a):
            raise ValueError(f"cylinder word is not a walk at {a} -> {b}")
        if b == a.reverse():
            raise ValueError(f"cylinder word backtracks at {a} -> {b}")


def boundary_measure(g: MetricGraph, cyl: BoundaryCylinder,
                     resistance: ResistanceMap | None = None) -> float:
    """Mass of a boundary cylinder under the harmonic measure seen from the root.

    The unit flow to infinity splits at each vertex in proportion to
    ``1 / (l(f) + R(f))`` over the available continuations ``f``.
    """
    _check_word(g, cyl)
    R = resistance if resistance is not None else solve_R(g)

    def weight(oe):
        r = R[oe]
        return 0.0 if math.isinf(r) else 1.0 / (g.length(oe) + r)

    first = cyl.word[0]
    norm = sum(weight(f) for f in g.out_edges(cyl.root))
    p = weight(first) / norm
    for prev, cur in zip(cyl.word, cyl.word[1:]):
        if p == 0.0:
            return 0.0
        rev = prev.reverse()
        norm = sum(weight(f) for f in g.out_edges(g.head(prev)) if f != rev)
        if norm == 0.0:
            return 0.0
        p *= weight(cur) / norm
    return p


class PJCheck(NamedTuple):
    lhs: float
    rhs: float
    difference: float


def pj_identity_check(g: MetricGraph, e: int, resistance: ResistanceMap | None = None) -> PJCheck:
    """Compare half the total variation of ``mu_head - mu_tail`` with the hyperbolic mass of ``e``.

    Harmonic measures are evaluated on the two halves of the boundary cut
    by the lift of ``e``: the ends beyond its head and those beyond its tail.
    """
    if genus(g) < 2:
        raise GraphValidationError(f"identity needs genus >= 2, got {genus(g)}")
    R = resistance if resistance is not None else solve_R(g)
    if not math.isfinite(R.circuit(e)):
        return PJCheck(0.0, 0.0, 0.0)
    fwd = OrientedEdge(e)
    bwd = fwd.reverse()
    head, tail = g.head(fwd), g.tail(fwd)

    def ends_beyond(root, oe, through):
        # mass of the ends reached from ``root`` after crossing ``oe``; if
        # ``through`` the walk starts with ``oe`` itself, else with its continuations
        if through:
            return boundary_measure(g, BoundaryCylinder(root, [oe]), R)
        return sum(boundary_measure(g, BoundaryCylinder(root, [f]), R)
                   for f in g.out_edges(root) if f != oe.reverse())

    # from the head: the ends beyond the head lie ahead, the others behind bwd
    head_ahead = ends_beyond(head, fwd, through=False)
    head_behind = ends_beyond(head, bwd, through=True)
    tail_ahead = ends_beyond(tail, fwd, through=True)
    tail_behind = ends_beyond(tail, bwd, through=False)
    lhs = 0.5 * (abs(head_ahead - tail_ahead) + abs(head_behind - tail_behind))
    rhs = float(hyperbolic_measure(g, R).mass[e])
    return PJCheck(lhs, rhs, abs(lhs - rhs))
