import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from canonical_measures import build_graph
from canonical_measures.checks import random_graph

SQRT41 = math.sqrt(41)

GRAPHS = {
    "banana": [(0, 1, 2), (0, 1, 1), (0, 1, 1)],
    "dumbbell": [(0, 0, 1), (1, 1, 1), (0, 1, 1)],
    "theta": [(0, 1, 1), (0, 1, 1), (0, 1, 1)],
    "k4": [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)],
    "petersen": [(i, (i + 1) % 5, 1) for i in range(5)]
    + [(i, i + 5, 1) for i in range(5)]
    + [(5 + i, 5 + (i + 2) % 5, 1) for i in range(5)],
    "rose2": [(0, 0, 1), (0, 0, 1)],
    "circle": [(0, 0, 1)],
    "path": [(0, 1, 1), (1, 2, 2)],
}


def named(name):
    return build_graph(GRAPHS[name])


def rose(d, length=1.0):
    return build_graph([(0, 0, length)] * d)


@pytest.fixture
def banana():
    return named("banana")


@pytest.fixture
def dumbbell():
    return named("dumbbell")


@pytest.fixture
def k4():
    return named("k4")


def series(*rs):
    return sum(rs, Fraction(0))


def parallel(*rs):
    return 1 / sum((1 / r for r in rs), Fraction(0))


def reduced_mass(length, rest):
    """Zhang mass ``l / (R + l)`` from an effective resistance found by series-parallel reduction."""
    length = Fraction(length)
    return length / (rest + length)


@st.composite
def graphs(draw, min_genus=0, max_genus=4, max_vertices=6):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    n = draw(st.integers(1, max_vertices))
    k = draw(st.integers(max(min_genus, 1 if n == 1 else 0), max_genus))
    return random_graph(np.random.default_rng(seed), n, k)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
