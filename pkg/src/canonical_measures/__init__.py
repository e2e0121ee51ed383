"""Canonical measures on compact metric graphs.

Zhang's canonical measure, pushdowns of canonical measures from finite
Galois covers, and the measure induced by the universal cover, each with an
independent cross-check.
"""

from .covers import (
    CoveringMap,
    FiniteGroup,
    VoltageCover,
    build_cover,
    cover_canonical_pushdown,
    homology_tower,
    lift_spread,
    pushdown,
    quotient_voltages,
)
from .errors import CapExceededError, ConvergenceError, GraphValidationError, InvariantError
from .fileformats import parse_graph_text, parse_voltages, read_graph, read_voltages, write_graph
from .graph_core import (
    Measure,
    MetricGraph,
    NBDigraph,
    OrientedEdge,
    bridges,
    build_graph,
    contract,
    genus,
    is_bridge,
    nb_cycle_counts,
    nb_digraph,
    nb_reachable_cycles,
    spanning_tree,
    subdivide,
)
from .harmonic import (
    Cochain,
    coboundary,
    dstar,
    effective_resistance,
    harmonic_projection,
    j_function,
    laplacian,
    resistance_between,
    spanning_tree_measure,
    zhang_edge_mass,
    zhang_measure,
)
from .hyperbolic import (
    BoundaryCylinder,
    ResistanceMap,
    boundary_measure,
    hyperbolic_measure,
    pj_identity_check,
    solve_R,
    truncated_cover_measure,
    wired_ball,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCylinder",
    "CapExceededError",
    "Cochain",
    "ConvergenceError",
    "CoveringMap",
    "FiniteGroup",
    "GraphValidationError",
    "InvariantError",
    "Measure",
    "MetricGraph",
    "NBDigraph",
    "OrientedEdge",
    "ResistanceMap",
    "VoltageCover",
    "boundary_measure",
    "bridges",
    "build_cover",
    "build_graph",
    "coboundary",
    "contract",
    "cover_canonical_pushdown",
    "dstar",
    "effective_resistance",
    "genus",
    "harmonic_projection",
    "homology_tower",
    "hyperbolic_measure",
    "is_bridge",
    "j_function",
    "laplacian",
    "lift_spread",
    "nb_cycle_counts",
    "nb_digraph",
    "nb_reachable_cycles",
    "parse_graph_text",
    "parse_voltages",
    "pj_identity_check",
    "pushdown",
    "quotient_voltages",
    "read_graph",
    "read_voltages",
    "resistance_between",
    "solve_R",
    "spanning_tree",
    "spanning_tree_measure",
    "subdivide",
    "truncated_cover_measure",
    "wired_ball",
    "write_graph",
    "zhang_edge_mass",
    "zhang_measure",
]
