import numpy as np
import pytest
from hypothesis import given, settings

from canonical_measures import (
    GraphValidationError,
    Measure,
    MetricGraph,
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
from canonical_measures.graph_core import aggregate_measure

from conftest import GRAPHS, graphs, named


class TestBuildGraph:
    def test_banana(self):
        g = build_graph([(0, 1, 2), (0, 1, 1), (0, 1, 1)])
        assert (g.num_vertices, g.num_edges, genus(g)) == (2, 3, 2)
        assert g.lengths.tolist() == [2.0, 1.0, 1.0]

    def test_single_edge_is_a_tree(self):
        assert genus(build_graph([(0, 1, 1)])) == 0

    def test_rose(self):
        g = build_graph([(0, 0, 1), (0, 0, 1)])
        assert (g.num_vertices, genus(g)) == (1, 2)
        assert g.is_loop(0) and g.is_loop(1)

    def test_ids_follow_input_order(self):
        g = build_graph([(2, 1, 1.5), (1, 0, 2.5)])
        assert g.edges() == [(2, 1, 1.5), (1, 0, 2.5)]

    def test_sparse_labels_are_compacted(self):
        g = build_graph([(10, 30, 1), (30, 20, 1)])
        assert g.num_vertices == 3
        assert g.labels == (10, 20, 30)
        assert g.edge(0) == (0, 2, 1.0)

    @pytest.mark.parametrize("edges, match", [
        ([], "empty"),
        ([(0, 1, 0)], "length"),
        ([(0, 1, -1)], "length"),
        ([(0, 1, float("inf"))], "length"),
        ([(0, 1, 1), (2, 3, 1)], "disconnected"),
        ([(0, 1)], "expected"),
        ([(-1, 0, 1)], "nonnegative"),
    ])
    def test_rejects(self, edges, match):
        with pytest.raises(GraphValidationError, match=match):
            build_graph(edges)

    def test_immutable(self):
        g = named("banana")
        with pytest.raises(ValueError):
            g.lengths[0] = 5.0

    def test_equality_and_hash(self):
        assert named("k4") == named("k4")
        assert hash(named("k4")) == hash(named("k4"))
        assert named("k4") != named("banana")


class TestOrientedEdge:
    def test_reverse_is_involution(self):
        oe = OrientedEdge(3)
        assert oe.reverse().reverse() == oe
        assert oe.reverse() != oe

    def test_index_round_trip(self):
        for i in range(10):
            assert OrientedEdge.from_index(i).index == i

    def test_loop_orientations_are_distinct_with_same_endpoints(self):
        g = named("rose2")
        a, b = OrientedEdge(0), OrientedEdge(0).reverse()
        assert a != b
        assert g.tail(a) == g.head(a) == g.tail(b) == g.head(b) == 0

    def test_endpoints(self, banana):
        oe = OrientedEdge(0)
        assert (banana.tail(oe), banana.head(oe)) == (0, 1)
        assert (banana.tail(oe.reverse()), banana.head(oe.reverse())) == (1, 0)

    def test_loop_counts_twice_in_degree(self):
        g = named("dumbbell")
        assert g.degree(0) == 3
        assert len(g.out_edges(0)) == 3


class TestSubdivide:
    def test_loop_becomes_two_cycle(self):
        g = build_graph([(0, 0, 2)])
        h, emap = subdivide(g, 0, 1.0)
        assert h.num_vertices == 2
        assert sorted(h.lengths.tolist()) == [1.0, 1.0]
        assert not h.is_loop(0) and not h.is_loop(1)
        assert emap[0] == (0, 1)
        assert genus(h) == 1

    def test_pieces(self, banana):
        h, emap = subdivide(banana, 0, 0.5)
        assert emap[0] == (0, 3)
        assert h.length(0) == 0.5 and h.length(3) == 1.5
        assert genus(h) == genus(banana)

    @pytest.mark.parametrize("t", [0.0, 2.0, -1.0, 3.0])
    def test_rejects_t_outside_open_interval(self, banana, t):
        with pytest.raises(ValueError):
            subdivide(banana, 0, t)

    def test_measure_transport(self, banana):
        h, emap = subdivide(banana, 0, 0.5)
        m = Measure.lebesgue(h)
        back = aggregate_measure(m, banana, emap)
        assert np.allclose(back.mass, banana.lengths)


class TestContract:
    def test_single_vertex_is_identity(self, k4):
        c = contract(k4, vertices=[2])
        assert c.graph == k4

    def test_path_end(self):
        g = build_graph([(0, 1, 1), (1, 2, 2)])
        c = contract(g, vertices=[1, 2], edges=[1])
        assert c.graph.num_vertices == 2 and c.graph.num_edges == 1
        assert c.graph.length(0) == 1
        assert c.edge_map == {0: 0, 1: None}

    def test_disconnected_subgraph_goes_to_one_point(self):
        g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
        c = contract(g, vertices=[0, 3])
        assert c.graph.num_vertices == 3
        assert genus(c.graph) == 1
        assert c.vertex_map[0] == c.vertex_map[3] == c.point

    def test_created_loops_are_kept(self):
        g = build_graph([(0, 1, 1), (0, 1, 2)])
        c = contract(g, edges=[0])
        assert c.graph.num_edges == 1 and c.graph.is_loop(0)
        assert c.graph.length(0) == 2

    def test_spanning_tree_contraction_keeps_genus(self, k4):
        tree = spanning_tree(k4)
        c = contract(k4, edges=np.flatnonzero(tree.in_tree).tolist())
        assert c.graph.num_vertices == 1
        assert genus(c.graph) == genus(k4)

    def test_rejects_out_of_range(self, k4):
        with pytest.raises(GraphValidationError):
            contract(k4, vertices=[9])

    def test_subdivide_then_contract_recovers_graph(self, banana):
        h, _ = subdivide(banana, 1, 0.25)
        c = contract(h, vertices=[2, 0], edges=[1])
        # the piece of length 0.25 disappears; the remaining piece closes the edge back up
        assert c.graph.num_edges == 3
        assert sorted(c.graph.lengths.tolist()) == [0.75, 1.0, 2.0]


class TestGenusAndBridges:
    @pytest.mark.parametrize("name, k", [("banana", 2), ("path", 0), ("rose2", 2), ("k4", 3),
                                         ("petersen", 6), ("circle", 1)])
    def test_genus(self, name, k):
        assert genus(named(name)) == k

    def test_dumbbell_middle(self, dumbbell):
        info = is_bridge(dumbbell, 2)
        assert info
        assert info.tail_side == {0} and info.head_side == {1}

    @pytest.mark.parametrize("e", [0, 1, 2])
    def test_banana_has_no_bridge(self, banana, e):
        assert not is_bridge(banana, e)

    def test_loop_never_bridge(self, dumbbell):
        assert not is_bridge(dumbbell, 0)

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_bridge_mask_matches_deletion(self, g):
        mask = bridges(g)
        assert mask.tolist() == [bool(is_bridge(g, e)) for e in range(g.num_edges)]


def _walk_counts(g, length):
    """Number of non-backtracking walks of each length starting with every oriented edge."""
    A = nb_digraph(g).matrix.astype(np.float64).toarray()
    v = np.ones(len(A))
    out = []
    for _ in range(length):
        v = A @ v
        out.append(v.copy())
    return out


class TestNBDigraph:
    def test_out_degree_matches_continuation_set(self):
        for name, edges in GRAPHS.items():
            g = build_graph(edges)
            nb = nb_digraph(g)
            for oe in g.oriented_edges():
                cont = [f for f in g.out_edges(g.head(oe)) if f != oe.reverse()]
                assert nb.out_degree(oe.index) == len(cont) == g.degree(g.head(oe)) - 1
                assert sorted(nb.successors(oe.index).tolist()) == sorted(f.index for f in cont)

    def test_dangling_stick_is_compact(self):
        g = build_graph([(0, 0, 1), (0, 0, 1), (0, 1, 1), (1, 2, 1)])
        assert nb_reachable_cycles(g, OrientedEdge(2)) == 0
        assert nb_reachable_cycles(g, OrientedEdge(3)) == 0
        assert nb_reachable_cycles(g, OrientedEdge(3).reverse()) == 2

    @pytest.mark.parametrize("edges", [[(0, 1, 1), (0, 1, 1)], [(0, 0, 1)]])
    def test_circle_sees_one_cycle(self, edges):
        assert nb_cycle_counts(build_graph(edges)).tolist() == [1] * (2 * len(edges))

    def test_cycle_with_tail_sees_one_cycle(self):
        # entering from the tail reaches both orientations of the same cycle
        g = build_graph([(0, 1, 1), (0, 1, 1), (0, 2, 1)])
        assert nb_reachable_cycles(g, OrientedEdge(2).reverse()) == 1
        assert nb_reachable_cycles(g, OrientedEdge(2)) == 0

    def test_banana_all_two(self, banana):
        assert nb_cycle_counts(banana).tolist() == [2] * 6

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_counts_match_walk_growth(self, g):
        n = 4 * g.num_edges + 4
        walks = _walk_counts(g, 2 * n)
        counts = nb_cycle_counts(g)
        for i, c in enumerate(counts):
            early, late = walks[n - 1][i], walks[2 * n - 1][i]
            if c == 0:
                assert late == 0
            elif c == 1:
                assert late == early > 0
            else:
                assert late > early

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_zero_iff_bridge_into_acyclic_side(self, g):
        counts = nb_cycle_counts(g)
        for e in range(g.num_edges):
            info = is_bridge(g, e)
            for rev, side in ((0, info.head_side), (1, info.tail_side)):
                acyclic = False
                if info:
                    inside = np.isin(np.arange(g.num_vertices), list(side))
                    inner_edges = int((inside[g.tails] & inside[g.heads]).sum())
                    acyclic = inner_edges == len(side) - 1
                assert (counts[2 * e + rev] == 0) == acyclic


class TestSpanningTree:
    @settings(max_examples=40, deadline=None)
    @given(graphs())
    def test_tree_paths(self, g):
        tree = spanning_tree(g)
        assert tree.in_tree.sum() == g.num_vertices - 1
        for v in range(g.num_vertices):
            path = tree.path(g, 0, v)
            cur = 0
            for oe in path:
                assert g.tail(oe) == cur and tree.in_tree[oe.edge]
                cur = g.head(oe)
            assert cur == v


class TestMeasure:
    def test_rejects_negative(self, banana):
        with pytest.raises(ValueError):
            Measure(banana, [1.0, -0.1, 0.0])

    def test_rejects_nan(self, banana):
        with pytest.raises(ValueError):
            Measure(banana, [1.0, float("nan"), 0.0])

    def test_density(self, banana):
        m = Measure(banana, [0.8, 0.6, 0.6])
        assert np.allclose(m.density(), [0.4, 0.6, 0.6])
        assert m.total() == pytest.approx(2.0)

    def test_scaled_graph(self, banana):
        assert np.allclose(banana.scaled(3.0).lengths, 3 * banana.lengths)
        assert isinstance(banana.scaled(3.0), MetricGraph)
