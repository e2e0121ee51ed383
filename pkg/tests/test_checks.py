from collections import Counter

import numpy as np
import pytest

from canonical_measures import genus
from canonical_measures.checks import (
    TOLERANCES,
    attach_tree,
    check_graph,
    multigraph_shapes,
    random_corpus,
    random_graph,
    run_suite,
)

from conftest import named


def test_random_graph_shape():
    g = random_graph(np.random.default_rng(1), 5, 3)
    assert g.num_vertices == 5 and genus(g) == 3
    assert np.all((g.lengths >= 0.1) & (g.lengths <= 10))


def test_corpus_is_seeded():
    a = random_corpus(20, 8, seed=4)
    b = random_corpus(20, 8, seed=4)
    assert a == b
    assert all(g.num_edges <= 8 for g in a)
    assert a != random_corpus(20, 8, seed=5)


def test_corpus_genus_range():
    corpus = random_corpus(30, 12, seed=0, genus_range=(2, 6))
    assert all(2 <= genus(g) <= 6 and g.num_edges <= 12 for g in corpus)


def test_attach_tree():
    g, new = attach_tree(named("banana"), np.random.default_rng(0), size=4)
    assert new == [3, 4, 5, 6]
    assert genus(g) == 2


def test_shape_counts():
    # connected multigraphs with loops, by number of edges
    counts = Counter(len(edges) for _, edges in multigraph_shapes(5))
    assert [counts[m] for m in range(1, 6)] == [2, 4, 11, 30, 95]


def test_check_graph_keys():
    res = check_graph(named("banana"))
    assert set(res) == set(TOLERANCES)
    res = check_graph(named("path"))
    assert "gauss_bonnet_total" not in res and "pushdown_deck_independence" not in res


@pytest.mark.parametrize("workers", [1, 4])
def test_suite_passes_and_is_order_stable(workers):
    corpus = random_corpus(25, 9, seed=11)
    res = run_suite(corpus, seed=3, workers=workers)
    assert all(r.passed for r in res), [r for r in res if not r.passed]
    assert res == run_suite(corpus, seed=3, workers=1)
