"""Finite Galois covers realized as derived graphs of voltage assignments.

A voltage assignment puts a group element on every edge (the reverse edge
carries the inverse).  The derived graph has vertices ``(x, g)`` and, for each
base edge ``e: u -> v`` and sheet ``g``, an edge ``(u, g) -> (v, g * a(e))``.
The group acts on the left, ``h . (x, g) = (x, h * g)``, and this is the deck
action.  Vertex ``(x, g)`` gets id ``g * |V| + x``; edge ``(e, g)`` gets id
``g * |E| + e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphValidationError, InvariantError
from .graph_core import Measure, MetricGraph, OrientedEdge, genus, spanning_tree
from .harmonic import zhang_measure

__all__ = [
    "FiniteGroup",
    "VoltageCover",
    "CoveringMap",
    "build_cover",
    "pushdown",
    "lift_spread",
    "cover_canonical_pushdown",
    "homology_tower",
    "quotient_voltages",
]


class FiniteGroup:
    """Finite group given by a multiplication table over element indices.

    The table is checked on construction: every row and column must be a
    permutation, there must be a two-sided identity, and multiplication must
    be associative.  Associativity is verified with Light's test over a
    generating set, which costs ``O(d^2)`` per generator instead of ``O(d^3)``.
    """

    def __init__(self, mul, generators=None, cyclic_shape: tuple[int, int] | None = None):
        table = np.array(mul, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GraphValidationError("multiplication table must be a nonempty square array")
        d = table.shape[0]
        if table.min() < 0 or table.max() >= d:
            raise GraphValidationError("multiplication table entry out of range")
        ref = np.arange(d)
        if not (np.array_equal(np.sort(table, axis=1), np.broadcast_to(ref, (d, d)))
                and np.array_equal(np.sort(table, axis=0), np.broadcast_to(ref[:, None], (d, d)))):
            raise GraphValidationError("multiplication table is not a Latin square")
        ident = [a for a in range(d)
                 if np.array_equal(table[a], ref) and np.array_equal(table[:, a], ref)]
        if not ident:
            raise GraphValidationError("multiplication table has no identity")
        table.setflags(write=False)
        self.table = table
        self.identity = ident[0]
        inverse = np.argmax(table == self.identity, axis=1)
        if not np.all(table[ref, inverse] == self.identity) or \
                not np.all(table[inverse, ref] == self.identity):
            raise GraphValidationError("some element has no two-sided inverse")
        inverse.setflags(write=False)
        self.inverse = inverse
        self.generators = self._generating_set(generators)
        self._check_associative()
        self.cyclic_shape = cyclic_shape

    @property
    def order(self) -> int:
        return self.table.shape[0]

    def mul(self, a, b):
        return self.table[a, b]

    def inv(self, a):
        return self.inverse[a]

    def _closure(self, gens) -> np.ndarray:
        # left-normed products of generators
        seen = np.zeros(self.order, dtype=bool)
        frontier = list(gens)
        seen[frontier] = True
        while frontier:
            prods = self.table[np.ix_(frontier, gens)].ravel()
            new = np.unique(prods[~seen[prods]])
            seen[new] = True
            frontier = new.tolist()
        return seen

    def _generating_set(self, generators) -> tuple[int, ...]:
        gens = [] if generators is None else [int(g) for g in generators]
        seen = self._closure(gens) if gens else np.zeros(self.order, dtype=bool)
        for a in range(self.order):
            if not seen[a]:
                gens.append(a)
                seen = self._closure(gens)
        return tuple(gens)

    def _check_associative(self):
        T = self.table
        for g in self.generators:
            if not np.array_equal(T[T[:, g], :], T[:, T[g, :]]):
                raise GraphValidationError("multiplication table is not associative")

    def generated_subgroup(self, elements) -> np.ndarray:
        """Mask of the subgroup generated by ``elements``."""
        elements = [int(a) for a in elements] or [self.identity]
        return self._closure(elements + [self.identity])

    # -- (Z/n)^k helpers -----------------------------------------------------
    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls([[0]], cyclic_shape=(1, 0))

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        return cls.cyclic_power(n, 1)

    @classmethod
    def cyclic_power(cls, n: int, k: int) -> "FiniteGroup":
        """``(Z/n)^k``; element index ``sum c_i n^i`` for coefficient vector ``c``."""
        if n < 1 or k < 0:
            raise GraphValidationError("need n >= 1 and k >= 0")
        d = n ** k
        coeffs = (np.arange(d)[:, None] // n ** np.arange(k)) % n
        s = (coeffs[:, None, :] + coeffs[None, :, :]) % n
        table = (s * n ** np.arange(k)).sum(axis=-1) if k else np.zeros((1, 1), dtype=np.int64)
        gens = [n ** i for i in range(k)] if n > 1 else []
        return cls(table, generators=gens, cyclic_shape=(n, k))

    def encode(self, coeffs) -> int:
        if self.cyclic_shape is None:
            raise GraphValidationError("coefficient vectors need a Z^k mod n group")
        n, k = self.cyclic_shape
        coeffs = list(coeffs)
        if len(coeffs) != k:
            raise GraphValidationError(f"expected {k} coefficients, got {len(coeffs)}")
        return int(sum((int(c) % n) * n ** i for i, c in enumerate(coeffs)))

    def decode(self, a: int) -> tuple[int, ...]:
        n, k = self.cyclic_shape
        return tuple(int(a // n ** i % n) for i in range(k))

    def __repr__(self):
        if self.cyclic_shape:
            n, k = self.cyclic_shape
            return f"FiniteGroup((Z/{n})^{k}, order={self.order})"
        return f"FiniteGroup(order={self.order})"


@dataclass(frozen=True, eq=False)
class VoltageCover:
    base: MetricGraph
    group: FiniteGroup
    voltage: np.ndarray = field(repr=False)  # element on each stored orientation

    def __post_init__(self):
        v = np.array(self.voltage, dtype=np.int64)
        if v.shape != (self.base.num_edges,):
            raise GraphValidationError("one voltage per edge required")
        if v.min(initial=0) < 0 or v.max(initial=0) >= self.group.order:
            raise GraphValidationError("voltage is not a group element")
        v.setflags(write=False)
        object.__setattr__(self, "voltage", v)

    @property
    def degree(self) -> int:
        return self.group.order

    def voltage_of(self, oe: OrientedEdge) -> int:
        a = int(self.voltage[oe.edge])
        return int(self.group.inv(a)) if oe.reversed else a

    def generates(self) -> bool:
        """Whether the derived graph is connected.

        With identity voltages on a spanning tree this is exactly the
        condition that the non-tree voltages generate the group; in general
        the voltages of the fundamental cycles must generate it.
        """
        tree = spanning_tree(self.base)
        g = self.base
        # potential p(x) = product of voltages along the tree path from the root
        pot = np.full(g.num_vertices, self.group.identity)
        for x in np.argsort(tree.depth, kind="stable"):
            oe = tree.parent_edge[x]
            if oe is not None:
                pot[x] = self.group.mul(pot[g.tail(oe)], self.voltage_of(oe))
        cycles = []
        for e in np.flatnonzero(~tree.in_tree):
            u, v = int(g.tails[e]), int(g.heads[e])
            a = self.group.mul(self.group.mul(pot[u], self.voltage[e]), self.group.inv(pot[v]))
            cycles.append(int(a))
        return bool(self.group.generated_subgroup(cycles).all())


@dataclass(frozen=True, eq=False)
class CoveringMap:
    cover: MetricGraph
    base: MetricGraph
    group: FiniteGroup
    vertex_projection: np.ndarray = field(repr=False)
    edge_projection: np.ndarray = field(repr=False)
    vertex_sheet: np.ndarray = field(repr=False)
    edge_sheet: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return self.group.order

    def deck(self, h: int) -> tuple[np.ndarray, np.ndarray]:
        """Vertex and edge permutations of the deck transformation ``h``."""
        n, m = self.base.num_vertices, self.base.num_edges
        vperm = self.group.mul(h, self.vertex_sheet) * n + self.vertex_projection
        eperm = self.group.mul(h, self.edge_sheet) * m + self.edge_projection
        return vperm, eperm

    def lift(self, e: int, sheet: int | None = None) -> int:
        sheet = self.group.identity if sheet is None else sheet
        return int(sheet * self.base.num_edges + e)

    def verify(self):
        """Check local isometry, deck automorphisms, freeness, fiber sizes and Euler characteristic."""
        c, b, d = self.cover, self.base, self.degree
        if not np.array_equal(c.lengths, b.lengths[self.edge_projection]):
            raise InvariantError("covering map is not a local isometry")
        if not (np.array_equal(self.vertex_projection[c.tails], b.tails[self.edge_projection])
                and np.array_equal(self.vertex_projection[c.heads], b.heads[self.edge_projection])):
            raise InvariantError("projection is not a graph morphism")
        if not (np.all(np.bincount(self.vertex_projection, minlength=b.num_vertices) == d)
                and np.all(np.bincount(self.edge_projection, minlength=b.num_edges) == d)):
            raise InvariantError("fibers do not all have the group order")
        base_lifts = self.group.identity * b.num_vertices + np.arange(b.num_vertices)
        orbit = np.empty((d, b.num_vertices), dtype=np.int64)
        for h in range(d):
            vperm, eperm = self.deck(h)
            if not (np.array_equal(c.tails[eperm], vperm[c.tails])
                    and np.array_equal(c.heads[eperm], vperm[c.heads])):
                raise InvariantError(f"deck transformation {h} is not an automorphism")
            if h != self.group.identity and np.any(vperm == np.arange(c.num_vertices)):
                raise InvariantError(f"deck transformation {h} fixes a vertex")
            orbit[h] = vperm[base_lifts]
        if not np.array_equal(np.sort(orbit.ravel()), np.arange(c.num_vertices)):
            raise InvariantError("deck group is not transitive on fibers")
        if (c.num_vertices - c.num_edges) != d * (b.num_vertices - b.num_edges):
            raise InvariantError("Euler characteristic is not multiplicative")


def build_cover(v: VoltageCover) -> CoveringMap:
    b, grp = v.base, v.group
    n, m, d = b.num_vertices, b.num_edges, grp.order
    sheets = np.arange(d)
    e_sheet = np.repeat(sheets, m)
    e_proj = np.tile(np.arange(m), d)
    tails = e_sheet * n + b.tails[e_proj]
    heads = grp.mul(e_sheet, v.voltage[e_proj]) * n + b.heads[e_proj]
    labels = np.arange(n * d)
    try:
        cover = MetricGraph(n * d, tails, heads, b.lengths[e_proj], labels=labels)
    except GraphValidationError as exc:
        raise GraphValidationError(
            f"voltages do not generate the group, so the cover is disconnected ({exc})") from None
    cm = CoveringMap(cover, b, grp,
                     np.tile(np.arange(n), d), e_proj,
                     np.repeat(sheets, n), e_sheet)
    cm.verify()
    return cm


def lift_spread(m: Measure, cm: CoveringMap) -> float:
    """Largest difference between the masses of two lifts of the same base edge."""
    per_sheet = m.mass.reshape(cm.degree, cm.base.num_edges)
    return float(np.max(per_sheet.max(axis=0) - per_sheet.min(axis=0), initial=0.0))


def pushdown(m: Measure, cm: CoveringMap, tol: float = 1e-9) -> Measure:
    """Base measure giving each edge the mass of one of its lifts (not the fiber sum)."""
    if m.graph is not cm.cover and m.graph != cm.cover:
        raise ValueError("measure does not live on this cover")
    spread = lift_spread(m, cm)
    if spread > tol:
        raise InvariantError(f"measure is not deck-invariant (lift spread {spread:.3e})")
    per_sheet = m.mass.reshape(cm.degree, cm.base.num_edges)
    return Measure(cm.base, per_sheet[cm.group.identity].copy())


def cover_canonical_pushdown(v: VoltageCover, tol: float = 1e-9) -> Measure:
    """Pushdown of the cover's canonical measure; total must be ``g - 1 + 1/d``."""
    cm = build_cover(v)
    mu = pushdown(zhang_measure(cm.cover), cm, tol=tol)
    expected = genus(v.base) - 1 + 1 / cm.degree
    if abs(mu.total() - expected) > tol:
        raise InvariantError(
            f"pushdown total {mu.total():.15g} differs from g-1+1/d = {expected:.15g}")
    return mu


def quotient_voltages(g: MetricGraph, n: int, coefficients) -> VoltageCover:
    """Cover for ``Z^k -> (Z/n)^k`` given integer vectors on every edge."""
    coefficients = [list(c) for c in coefficients]
    if len(coefficients) != g.num_edges:
        raise GraphValidationError("one coefficient vector per edge required")
    k = len(coefficients[0]) if coefficients else 0
    grp = FiniteGroup.cyclic_power(n, k)
    return VoltageCover(g, grp, [grp.encode(c) for c in coefficients])


def homology_tower(g: MetricGraph, n: int) -> VoltageCover:
    """Level ``n`` of the mod-``n`` homology tower: group ``(Z/n)^genus``.

    Tree edges carry the identity; the ``i``-th non-tree edge (in id order)
    carries the ``i``-th standard basis vector.
    """
    if n < 2:
        raise ValueError("tower level must be at least 2")
    tree = spanning_tree(g)
    k = genus(g)
    coeffs = []
    i = 0
    for e in range(g.num_edges):
        c = [0] * k
        if not tree.in_tree[e]:
            c[i] = 1
            i += 1
        coeffs.append(c)
    return quotient_voltages(g, n, coeffs)
