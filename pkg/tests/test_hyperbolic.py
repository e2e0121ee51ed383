import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canonical_measures import (
    BoundaryCylinder,
    CapExceededError,
    ConvergenceError,
    GraphValidationError,
    OrientedEdge,
    boundary_measure,
    build_graph,
    genus,
    hyperbolic_measure,
    pj_identity_check,
    solve_R,
    truncated_cover_measure,
    wired_ball,
    zhang_measure,
)
from canonical_measures.checks import attach_tree

from conftest import SQRT41, graphs, named, rose

REGULAR = {
    "k4": (named("k4"), 3),
    "petersen": (named("petersen"), 3),
    "theta": (named("theta"), 3),
    "k5": (build_graph([(u, v, 1) for u in range(5) for v in range(u + 1, 5)]), 4),
    "k33": (build_graph([(u, v, 1) for u in range(3) for v in range(3, 6)]), 3),
    "cube": (build_graph([(u, u ^ (1 << b), 1) for u in range(8) for b in range(3) if u < u ^ (1 << b)]), 3),
    "rose3": (rose(3), 6),
}


class TestBanana:
    def test_resistances(self, banana):
        R = solve_R(banana)
        r1 = (3 + SQRT41) / 8
        r2 = (SQRT41 - 1) / 4
        assert R.values.tolist() == pytest.approx([r1, r1, r2, r2, r2, r2], abs=1e-12)

    def test_masses(self, banana):
        mu = hyperbolic_measure(banana)
        expected = [(11 - SQRT41) / 10, (SQRT41 - 1) / 20, (SQRT41 - 1) / 20]
        assert mu.mass.tolist() == pytest.approx(expected, abs=1e-12)
        assert mu.mass.tolist() == pytest.approx([0.459688, 0.270156, 0.270156], abs=1e-6)
        assert mu.total() == pytest.approx(1.0, abs=1e-12)

    def test_unique_positive_solution(self, banana):
        assert solve_R(banana, check_uniqueness=True).unique is True

    def test_plain_sweeps_agree_with_newton(self, banana):
        a = solve_R(banana)
        b = solve_R(banana, newton=False)
        assert b.newton_steps == 0
        assert np.allclose(a.values, b.values, atol=1e-10)

    def test_circuit(self, banana):
        R = solve_R(banana)
        assert R.circuit(0) == pytest.approx(2 * (3 + SQRT41) / 8, abs=1e-12)


class TestClosedForms:
    @pytest.mark.parametrize("name", list(REGULAR))
    def test_regular_graphs(self, name):
        g, k = REGULAR[name]
        assert np.allclose(hyperbolic_measure(g).mass, 1 - 2 / k, atol=1e-10)

    def test_dumbbell(self, dumbbell):
        R = solve_R(dumbbell)
        assert np.allclose(R.values, 1.0, atol=1e-12)
        assert np.allclose(hyperbolic_measure(dumbbell).mass, 1 / 3, atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_rose_resistance(self, d):
        # each of the 2d - 1 continuations: 1/R = (2d - 1)/(1 + R), so R = 1/(2d - 2)
        R = solve_R(rose(d))
        assert np.allclose(R.values, 1 / (2 * d - 2), atol=1e-12)

    def test_genus_one_is_zero(self):
        g = build_graph([(0, 1, 1), (1, 0, 2), (0, 2, 1)])
        assert hyperbolic_measure(g).mass.tolist() == [0.0, 0.0, 0.0]

    def test_tree_rejected(self):
        with pytest.raises(GraphValidationError):
            hyperbolic_measure(build_graph([(0, 1, 1)]))

    def test_solver_needs_genus_two(self):
        with pytest.raises(GraphValidationError):
            solve_R(rose(1))

    def test_nonconvergence(self, banana):
        with pytest.raises(ConvergenceError) as info:
            solve_R(banana, max_iter=3, newton=False)
        assert info.value.iterations == 3
        assert info.value.residual > 0


class TestProperties:
    @settings(max_examples=50, deadline=None)
    @given(graphs(min_genus=2, max_genus=6, max_vertices=6))
    def test_gauss_bonnet(self, g):
        assert hyperbolic_measure(g).total() == pytest.approx(genus(g) - 1, abs=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(graphs(min_genus=2, max_genus=5, max_vertices=6))
    def test_fixed_point_equations(self, g):
        R = solve_R(g)
        assert R.residual < 1e-9
        lengths = np.repeat(g.lengths, 2)
        for oe in g.oriented_edges():
            if not math.isfinite(R[oe]):
                continue
            s = sum(1 / (lengths[f.index] + R[f]) for f in g.out_edges(g.head(oe))
                    if f != oe.reverse() and math.isfinite(R[f]))
            assert 1 / R[oe] == pytest.approx(s, rel=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(graphs(min_genus=2, max_genus=4, max_vertices=5))
    def test_truncations_bound_from_above(self, g):
        mu = hyperbolic_measure(g)
        for e in range(g.num_edges):
            est = [truncated_cover_measure(g, e, d) for d in (1, 2, 3, 4)]
            assert all(a >= b - 1e-12 for a, b in zip(est, est[1:]))
            assert est[-1] >= mu.mass[e] - 1e-12

    def test_base_bridge_between_cycles_has_mass(self, dumbbell):
        # its lifts split the tree into two transient halves
        assert zhang_measure(dumbbell).mass[2] == 0.0
        assert hyperbolic_measure(dumbbell).mass[2] > 0.3

    @settings(max_examples=30, deadline=None)
    @given(graphs(min_genus=2, max_genus=5, max_vertices=6), st.floats(0.05, 20))
    def test_scale_covariance(self, g, c):
        R, Rc = solve_R(g), solve_R(g.scaled(c))
        fin = R.finite
        assert np.array_equal(fin, Rc.finite)
        assert np.allclose(Rc.values[fin], c * R.values[fin], rtol=1e-9)
        assert np.allclose(hyperbolic_measure(g.scaled(c), Rc).mass, hyperbolic_measure(g, R).mass, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(graphs(min_genus=2, max_genus=4, max_vertices=5), st.integers(0, 2 ** 31))
    def test_attached_trees_get_zero(self, g, seed):
        grown, new = attach_tree(g, np.random.default_rng(seed), size=4)
        mu = hyperbolic_measure(grown)
        assert all(mu.mass[e] == 0.0 for e in new)
        old = [e for e in range(grown.num_edges) if e not in new]
        assert np.allclose(mu.mass[old], hyperbolic_measure(g).mass, atol=1e-10)


class TestTruncation:
    def test_depth_one_ball(self, banana):
        wb = wired_ball(banana, 0, 1)
        # the lift plus two continuations on each side; the four boundary points become one
        assert wb.ball_vertices == 6 and wb.boundary_vertices == 4
        assert wb.graph.num_vertices == 3 and wb.graph.num_edges == 5

    def test_nonincreasing_toward_limit(self, banana):
        target = hyperbolic_measure(banana).mass[1]
        est = [truncated_cover_measure(banana, 1, d) for d in range(1, 13)]
        assert all(a >= b - 1e-15 for a, b in zip(est, est[1:]))
        assert est[-1] >= target - 1e-12
        assert est[-1] - target < 1e-4

    def test_cap(self, k4):
        with pytest.raises(CapExceededError):
            wired_ball(k4, 0, 30, node_cap=1000)

    def test_compact_side_is_not_wired(self):
        g = build_graph([(0, 0, 1), (0, 0, 1), (0, 1, 1)])
        wb = wired_ball(g, 2, 5)
        # beyond the pendant vertex there is nothing to grow, so only one side is wired
        assert truncated_cover_measure(g, 2, 5) == 0.0
        assert wb.boundary_vertices > 0

    def test_rejects_low_genus(self):
        with pytest.raises(GraphValidationError):
            truncated_cover_measure(rose(1), 0, 3)


class TestBoundaryMeasure:
    def test_first_step_is_a_probability(self, banana):
        R = solve_R(banana)
        for v in range(2):
            total = sum(boundary_measure(banana, BoundaryCylinder(v, [f]), R) for f in banana.out_edges(v))
            assert total == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(graphs(min_genus=2, max_genus=4, max_vertices=5), st.data())
    def test_children_sum_to_parent(self, g, data):
        R = solve_R(g)
        root = data.draw(st.integers(0, g.num_vertices - 1))
        word = [data.draw(st.sampled_from(g.out_edges(root)))]
        for _ in range(data.draw(st.integers(0, 3))):
            cont = [f for f in g.out_edges(g.head(word[-1])) if f != word[-1].reverse()]
            if not cont:
                break
            word.append(data.draw(st.sampled_from(cont)))
        parent = boundary_measure(g, BoundaryCylinder(root, word), R)
        cont = [f for f in g.out_edges(g.head(word[-1])) if f != word[-1].reverse()]
        children = sum(boundary_measure(g, BoundaryCylinder(root, word + [f]), R) for f in cont)
        if children > 0:
            assert children == pytest.approx(parent, abs=1e-12)
        else:
            assert parent == 0.0 or not cont

    def test_rejects_backtracking(self, banana):
        with pytest.raises(ValueError, match="backtracks"):
            boundary_measure(banana, BoundaryCylinder(0, [OrientedEdge(0), OrientedEdge(0).reverse()]))

    def test_rejects_non_walk(self, banana):
        with pytest.raises(ValueError, match="walk"):
            boundary_measure(banana, BoundaryCylinder(0, [OrientedEdge(0), OrientedEdge(1)]))

    def test_rejects_wrong_root(self, banana):
        with pytest.raises(ValueError, match="root"):
            boundary_measure(banana, BoundaryCylinder(1, [OrientedEdge(0)]))


class TestPoissonJensen:
    @pytest.mark.parametrize("name", ["banana", "dumbbell", "k4", "petersen", "theta"])
    def test_named(self, name):
        g = named(name)
        R = solve_R(g)
        for e in range(g.num_edges):
            assert pj_identity_check(g, e, R).difference <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(graphs(min_genus=2, max_genus=5, max_vertices=6))
    def test_closed_form(self, g):
        # with the split weights 1/(l + R), the half total variation is a + b - 1 where
        # a = (R(rev e) + l) / (R(e) + R(rev e) + l) and b = (R(e) + l) / (R(e) + R(rev e) + l)
        R = solve_R(g)
        mu = hyperbolic_measure(g, R)
        for e in range(g.num_edges):
            chk = pj_identity_check(g, e, R)
            assert chk.rhs == mu.mass[e]
            assert chk.difference <= 1e-9
            r, rb, l = R.values[2 * e], R.values[2 * e + 1], g.length(e)
            if math.isfinite(r + rb):
                a = (rb + l) / (r + rb + l)
                b = (r + l) / (r + rb + l)
                assert chk.lhs == pytest.approx(a + b - 1, abs=1e-12)
