import json

import pytest
from hypothesis import given, settings

from canonical_measures import GraphValidationError, build_graph, parse_graph_text, parse_voltages, read_graph
from canonical_measures.fileformats import format_graph_text, graph_to_json, parse_graph_json, write_graph

from conftest import graphs, named


def test_text_with_comments():
    g = parse_graph_text("# banana\n0 1 2   # long edge\n\n0 1 1\n0 1 1\n")
    assert g == named("banana")


@pytest.mark.parametrize("text, line, match", [
    ("0 1 1\n0 1\n", 2, "fields"),
    ("0 1 1\n0 x 1\n", 2, "vertex"),
    ("# c\n0 1 abc\n", 2, "length"),
    ("0 1 0\n", 1, "positive"),
    ("0 1 1\n1 2 -1\n", 2, "positive"),
    ("0 -1 1\n", 1, "nonnegative"),
    ("0 1 nan\n", 1, "positive"),
])
def test_text_errors_carry_line_numbers(text, line, match):
    with pytest.raises(GraphValidationError, match=match) as info:
        parse_graph_text(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_disconnected_text():
    with pytest.raises(GraphValidationError, match="disconnected"):
        parse_graph_text("0 1 1\n2 3 1\n")


def test_empty_text():
    with pytest.raises(GraphValidationError, match="empty"):
        parse_graph_text("# nothing\n")


def test_json_errors():
    with pytest.raises(GraphValidationError, match="line 1"):
        parse_graph_json("{bad")
    with pytest.raises(GraphValidationError, match="edges"):
        parse_graph_json('{"nodes": []}')
    with pytest.raises(GraphValidationError, match="edge 1"):
        parse_graph_json('{"edges": [[0, 1, 1], [0, "a", 1]]}')


@settings(max_examples=50, deadline=None)
@given(graphs(max_genus=5))
def test_round_trips(g):
    assert parse_graph_text(format_graph_text(g)) == g
    assert parse_graph_json(graph_to_json(g)) == g


def test_files(tmp_path):
    g = build_graph([(3, 7, 0.1), (7, 9, 1 / 3), (9, 3, 2.5)])
    for name in ("g.txt", "g.json"):
        write_graph(g, tmp_path / name)
        assert read_graph(tmp_path / name) == g


def test_missing_file(tmp_path):
    with pytest.raises(GraphValidationError, match="cannot read"):
        read_graph(tmp_path / "nope.txt")


class TestVoltages:
    def test_coefficient_vectors(self):
        g = named("rose2")
        v = parse_voltages(g, json.dumps({"group": {"type": "Z^k mod n", "k": 2, "n": 3},
                                          "voltages": {"0": [1, 0], "1": [0, 2]}}))
        assert v.degree == 9
        assert [v.group.decode(a) for a in v.voltage] == [(1, 0), (0, 2)]

    def test_table_and_missing_edges_default_to_identity(self):
        g = named("banana")
        v = parse_voltages(g, json.dumps({"group": {"type": "table", "mul": [[0, 1], [1, 0]]},
                                          "voltages": {"2": 1}}))
        assert v.voltage.tolist() == [0, 0, 1]

    @pytest.mark.parametrize("spec, match", [
        ({"group": {"type": "free"}}, "unknown group"),
        ({"voltages": {}}, "group"),
        ({"group": {"type": "Z^k mod n", "k": 2}}, "integer"),
        ({"group": {"type": "Z^k mod n", "k": 1, "n": 2}, "voltages": {"5": [1]}}, "out of range"),
        ({"group": {"type": "Z^k mod n", "k": 1, "n": 2}, "voltages": {"0": [1, 1]}}, "does not match"),
        ({"group": {"type": "Z^k mod n", "k": 1, "n": 2}, "voltages": {"0": 7}}, "outside"),
        ({"group": {"type": "Z^k mod n", "k": 1, "n": 2}, "voltages": {"x": 1}}, "not an integer"),
        ({"group": {"type": "table", "mul": [[0, 1], [0, 1]]}}, "Latin"),
    ])
    def test_errors(self, spec, match):
        with pytest.raises(GraphValidationError, match=match):
            parse_voltages(named("banana"), json.dumps(spec))
