"""Random test graphs and the invariant suite run by ``check``.

Every invariant is evaluated per graph as a worst-case residual; the suite
reports the maximum over the corpus against a fixed tolerance.  Invariants
that do not apply to a graph (say, hyperbolic ones in genus below 2) are
skipped for it and do not count as cases.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covers import build_cover, homology_tower, lift_spread, pushdown
from .graph_core import (
    MetricGraph,
    aggregate_measure,
    bridges,
    build_graph,
    contract,
    genus,
    is_bridge,
    nb_cycle_counts,
    subdivide,
)
from .harmonic import (
    Cochain,
    dstar,
    harmonic_projection,
    j_function,
    resistance_between,
    spanning_tree_measure,
    zhang_measure,
)
from .hyperbolic import hyperbolic_measure, pj_identity_check, solve_R

__all__ = [
    "random_graph",
    "random_corpus",
    "attach_tree",
    "multigraph_shapes",
    "TOLERANCES",
    "CheckResult",
    "check_graph",
    "run_suite",
]

LENGTH_RANGE = (0.1, 10.0)
ORACLE_EDGE_CAP = 12
COVER_GENUS_CAP = 4

# name -> tolerance on the worst residual
TOLERANCES = {
    "foster_total": 1e-9,
    "spanning_tree_oracle": 1e-9,
    "resistance_route": 1e-9,
    "projection_idempotence": 1e-10,
    "projection_edge_form": 1e-9,
    "subdivision_invariance": 1e-9,
    "j_symmetry": 1e-9,
    "rayleigh_monotonicity": 1e-12,
    "bridge_vanishing": 0.0,
    "nb_bridge_consistency": 0.0,
    "gauss_bonnet_total": 1e-8,
    "resistance_residual": 1e-9,
    "scale_covariance": 1e-9,
    "pushdown_deck_independence": 1e-12,
    "cover_total": 1e-9,
    "poisson_jensen": 1e-9,
}


def _lengths(rng, size):
    lo, hi = LENGTH_RANGE
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def random_graph(rng: np.random.Generator, num_vertices: int, genus_: int) -> MetricGraph:
    """Random spanning tree on ``num_vertices`` plus ``genus_`` extra edges.

    Extra edges join uniformly random vertex pairs, so loops and parallel
    edges occur.  Lengths are log-uniform on ``[0.1, 10]``.
    """
    if num_vertices < 1 or genus_ < 0 or (num_vertices == 1 and genus_ == 0):
        raise ValueError("need at least one edge")
    order = rng.permutation(num_vertices)
    edges = []
    for i in range(1, num_vertices):
        parent = order[rng.integers(i)]
        edges.append((int(parent), int(order[i])))
    for _ in range(genus_):
        u, v = rng.integers(num_vertices, size=2)
        edges.append((int(u), int(v)))
    edges = [edges[i] for i in rng.permutation(len(edges))]
    ls = _lengths(rng, len(edges))
    return build_graph([(u, v, float(l)) for (u, v), l in zip(edges, ls)])


def random_corpus(count: int, max_edges: int, seed: int, genus_range=None) -> list[MetricGraph]:
    """``count`` seeded random connected graphs with at most ``max_edges`` edges.

    With ``genus_range = (lo, hi)`` the genus is drawn uniformly from it and
    the vertex count is chosen to respect ``max_edges``.
    """
    if max_edges < 1:
        raise ValueError("max_edges must be positive")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        if genus_range is None:
            m = int(rng.integers(1, max_edges + 1))
            n = int(rng.integers(1, m + 2))
            k = m - n + 1
            if n == 1 and k == 0:
                n, k = 2, 0
        else:
            lo, hi = genus_range
            k = int(rng.integers(lo, hi + 1))
            if k > max_edges:
                raise ValueError("genus range exceeds max_edges")
            n = int(rng.integers(1, max_edges - k + 2))
        out.append(random_graph(rng, n, k))
    return out


def attach_tree(g: MetricGraph, rng: np.random.Generator, size: int = 3) -> tuple[MetricGraph, list[int]]:
    """Glue a random tree with ``size`` edges onto a vertex of ``g``; returns the new edge ids."""
    n = g.num_vertices
    labels = g.labels
    edges = [(labels[u], labels[v], l) for u, v, l in g.edges()]
    fresh = max(labels) + 1
    nodes = [labels[int(rng.integers(n))]]
    new = []
    for i in range(size):
        parent = nodes[int(rng.integers(len(nodes)))]
        child = fresh + i
        new.append(len(edges))
        edges.append((parent, child, float(_lengths(rng, 1)[0])))
        nodes.append(child)
    return build_graph(edges), new


def _canonical(n: int, edges) -> tuple:
    # smallest sorted edge list over vertex relabelings that respect a degree refinement
    deg = [0] * n
    loops = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
        loops[u] += u == v
    key = [(deg[x], loops[x]) for x in range(n)]
    classes = {}
    for x in range(n):
        classes.setdefault(key[x], []).append(x)
    blocks = [classes[k] for k in sorted(classes)]
    best = None
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        order = [x for block in choice for x in block]
        perm = {x: i for i, x in enumerate(order)}
        form = tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in edges))
        if best is None or form < best:
            best = form
    return (n, best)


def multigraph_shapes(max_edges: int) -> list[tuple[int, tuple]]:
    """Every connected multigraph (loops allowed) with 1..max_edges edges, up to isomorphism.

    Returned as ``(num_vertices, edges)``.  Each shape with ``m`` edges comes
    from one with ``m - 1`` by adding an edge between existing vertices or a
    pendant edge; every connected graph has a non-bridge or a leaf edge to
    remove, so nothing is missed.
    """
    level = {(1, ())}
    out = []
    for _ in range(max_edges):
        nxt = set()
        for n, edges in level:
            for u in range(n):
                for v in range(u, n):
                    nxt.add(_canonical(n, edges + ((u, v),)))
                nxt.add(_canonical(n + 1, edges + ((u, n),)))
        level = nxt
        out.extend(sorted(level))
    return out


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    worst: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)), initial=0.0))


def check_graph(g: MetricGraph, seed: int = 0) -> dict[str, float]:
    """Worst residual of each applicable invariant on one graph."""
    rng = np.random.default_rng(seed)
    out: dict[str, float] = {}
    k = genus(g)
    mu = zhang_measure(g)

    out["foster_total"] = abs(mu.total() - k)
    if g.num_edges <= ORACLE_EDGE_CAP:
        out["spanning_tree_oracle"] = _rel(mu.mass, spanning_tree_measure(g, cap=ORACLE_EDGE_CAP).mass)
    out["resistance_route"] = _rel(mu.mass, zhang_measure(g, method="resistance").mass)

    omega = Cochain(g, rng.standard_normal(g.num_edges))
    p = harmonic_projection(g, omega)
    pp = harmonic_projection(g, p)
    scale = max(1.0, omega.norm())
    out["projection_idempotence"] = max((pp - p).norm(), float(np.max(np.abs(dstar(p))))) / scale
    edge_comp = [harmonic_projection(g, Cochain.edge_form(g, e)).components[e] for e in range(g.num_edges)]
    out["projection_edge_form"] = _rel(edge_comp, mu.mass)

    e = int(rng.integers(g.num_edges))
    t = float(rng.uniform(0.05, 0.95)) * g.length(e)
    h, emap = subdivide(g, e, t)
    out["subdivision_invariance"] = _rel(aggregate_measure(zhang_measure(h), g, emap).mass, mu.mass)

    if g.num_vertices >= 2:
        x, y, z = rng.integers(g.num_vertices, size=3)
        out["j_symmetry"] = float(abs(j_function(g, y, z)[x] - j_function(g, x, z)[y]))
        u, v = rng.choice(g.num_vertices, size=2, replace=False)
        r0 = resistance_between(g, u, v)
        lengths = g.lengths.copy()
        lengths[e] *= 1.0 + float(rng.uniform(0.1, 2.0))
        longer = MetricGraph(g.num_vertices, g.tails, g.heads, lengths, g.labels)
        worst = max(0.0, r0 - resistance_between(longer, u, v)) / max(1.0, r0)
        others = [f for f in range(g.num_edges) if f != e]
        if others:
            f = others[int(rng.integers(len(others)))]
            c = contract(g, edges=[f])
            worst = max(worst, mu.mass[e] - zhang_measure(c.graph).mass[c.edge_map[e]])
        out["rayleigh_monotonicity"] = float(worst)

    br = bridges(g)
    counts = nb_cycle_counts(g)
    mismatches = 0
    for ei in range(g.num_edges):
        info = is_bridge(g, ei)
        mismatches += bool(info) != bool(br[ei])
        for rev, side in ((0, info.head_side), (1, info.tail_side)):
            compact_side = bool(info) and _side_genus(g, side) == 0
            mismatches += (counts[2 * ei + rev] == 0) != compact_side
    out["nb_bridge_consistency"] = float(mismatches)

    grown, new = attach_tree(g, rng)
    vanish = float(np.max(zhang_measure(grown).mass[new]))
    if k >= 2:
        vanish = max(vanish, float(np.max(hyperbolic_measure(grown).mass[new])))
    out["bridge_vanishing"] = vanish

    if k >= 2:
        R = solve_R(g)
        hyp = hyperbolic_measure(g, R)
        out["gauss_bonnet_total"] = abs(hyp.total() - (k - 1))
        out["resistance_residual"] = R.residual
        c = float(rng.uniform(0.2, 5.0))
        Rc = solve_R(g.scaled(c))
        fin = R.finite
        out["scale_covariance"] = max(
            _rel(hyperbolic_measure(g.scaled(c), Rc).mass, hyp.mass),
            _rel(Rc.values[fin] / c, R.values[fin]),
            float(np.any(Rc.finite != fin)))
        out["poisson_jensen"] = max(pj_identity_check(g, ei, R).difference for ei in range(g.num_edges))

    if 1 <= k <= COVER_GENUS_CAP:
        cm = build_cover(homology_tower(g, 2))
        cover_mu = zhang_measure(cm.cover)
        out["pushdown_deck_independence"] = lift_spread(cover_mu, cm)
        pd = pushdown(cover_mu, cm)
        out["cover_total"] = abs(pd.total() - (k - 1 + 1 / cm.degree))
    return out


def _side_genus(g: MetricGraph, side) -> int:
    """Genus of the subgraph induced on a vertex set."""
    side = np.isin(np.arange(g.num_vertices), list(side))
    inside = side[g.tails] & side[g.heads]
    return int(inside.sum()) - int(side.sum()) + 1


def run_suite(graphs, seed: int = 0, workers: int | None = None) -> list[CheckResult]:
    """Run ``check_graph`` over a corpus (concurrently, results in input order)."""
    seeds = np.random.SeedSequence(seed).generate_state(max(len(graphs), 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_graph = list(pool.map(check_graph, graphs, [int(s) for s in seeds[:len(graphs)]]))
    results = []
    for name, tol in TOLERANCES.items():
        vals = [r[name] for r in per_graph if name in r]
        results.append(CheckResult(name, len(vals), max(vals, default=0.0), tol))
    return results
