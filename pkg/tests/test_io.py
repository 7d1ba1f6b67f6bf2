from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from graphmcp import GraphState, Weight
from graphmcp.casestudy import data_path
from graphmcp.io import (
    GraphFileError,
    dump_graph_file,
    export_dot,
    format_pvalues_csv,
    load_graph,
    parse_graph_file,
    parse_pvalues_csv,
    parse_truth_csv,
)
from graphmcp.sim import random_graph

BUNDLED = ["diabetes.graph", "atmosphere.graph", "pd.graph", "pd15.graph"]

SMALL = """
m: 2
nodes:
  - {id: 1, label: A, weight: 0.5}
  - {id: 2, label: B, weight: 1/2}
edges:
  - {from: A, to: B, weight: 1}
  - {from: 2, to: 1, weight: 0.25}
  - {from: 2, to: 1, weight: 0.25}
  - {from: 2, to: 1, weight: 1, epsilon: true}
"""


def test_parse_small():
    g = parse_graph_file(SMALL)
    assert g.labels == ("A", "B")
    assert g.weights == (Fraction(1, 2), Fraction(1, 2))
    assert g.transition[0][1] == 1
    # repeated edges add up; the epsilon edge adds an infinitesimal part
    assert g.transition[1][0] == Weight(Fraction(1, 2), 1)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_graphs_round_trip(name):
    g = load_graph(data_path(name))
    assert parse_graph_file(dump_graph_file(g)) == g


@given(st.integers(0, 10 ** 6), st.integers(1, 7), st.sampled_from(["random", "zero", "deficient"]))
def test_random_round_trip(seed, m, style):
    g = random_graph(seed, m, weight_style=style)
    assert parse_graph_file(dump_graph_file(g)) == g


def test_atmosphere_families():
    g = load_graph(data_path("atmosphere.graph"))
    names = {f.name: f for f in g.families}
    assert set(names) == {"F4", "F5"}
    assert [g.labels[i] for i in names["F4"].members] == ["H41", "H42"]
    assert names["F4"].out_edges == ((g.index("H2"), Weight(1)),)
    # an edge into a family is split equally between the members
    assert g.transition[g.index("H1")][g.index("H41")] == Fraction(1, 8)


def test_dot_after_removal(diabetes):
    dot = export_dot(GraphState.initial(diabetes).remove(0))
    assert dot.startswith("digraph G {")
    assert 'H2 -> H4 [label="2/3"];' in dot
    assert 'H2 [label="H2\\nw=3/4"];' in dot
    assert "H1" not in dot


def test_dot_deterministic_and_eps(atmosphere):
    g, _ = atmosphere
    assert export_dot(g) == export_dot(g)
    assert "cluster_0" in export_dot(g)
    e = parse_graph_file(SMALL)
    assert 'B -> A [label="1/2+ε"];' in export_dot(e)


@pytest.mark.parametrize("text, where", [
    ("[1, 2]", "<graph>"),
    ("m: 2\nnodes:\n  - {id: 1, label: A, weight: 1/2}\n", "<graph>:m"),
    ("nodes:\n  - {id: 1, label: A, weight: 1/x}\n", "<graph>:nodes[0]"),
    ("nodes:\n  - {id: 1, label: A, weight: 1}\nedges:\n  - {from: A, to: Z, weight: 1}\n", "<graph>:edges[0]"),
    ("nodes:\n  - {id: 1, label: A, weight: 1}\n  - {id: 2, label: B, weight: 0}\n"
     "edges:\n  - {from: A, to: B, weight: 3/2}\n", "<graph>"),
    ("nodes: [\n", "<graph>"),
])
def test_parse_errors_are_located(text, where):
    with pytest.raises(GraphFileError) as info:
        parse_graph_file(text)
    assert info.value.location.startswith(where)
    assert str(info.value).startswith(where)


def test_row_sum_violation_message():
    text = "nodes:\n  - {id: 1, label: A, weight: 1}\n  - {id: 2, label: B, weight: 0}\n" \
           "edges:\n  - {from: A, to: B, weight: 3/2}\n"
    with pytest.raises(GraphFileError, match="outside"):
        parse_graph_file(text)


def test_member_out_edges_rejected():
    text = """
nodes:
  - {id: 1, label: A, weight: 1}
  - {id: 2, label: B, weight: 0}
  - {id: 3, label: C, weight: 0}
families:
  - {name: F, members: [A, B]}
edges:
  - {from: A, to: C, weight: 1}
"""
    with pytest.raises(GraphFileError, match="family out-edges"):
        parse_graph_file(text)


def test_pvalues_csv(diabetes):
    p = parse_pvalues_csv("node,p\nH2,0.03\n1,1/100\nH4,0.024\nH3,0.02\n", diabetes)
    assert p == [Fraction(1, 100), Fraction(3, 100), Fraction(1, 50), Fraction(3, 125)]
    assert parse_pvalues_csv(format_pvalues_csv(diabetes.labels, p), diabetes) == p


@pytest.mark.parametrize("text, msg", [
    ("node,p\nH1,0.1\nH2,0.1\nH3,0.1\n", "no entry for H4"),
    ("node,p\nH1,1.5\n", "outside"),
    ("node,p\nH9,0.1\n", "unknown node"),
    ("node,p\nH1,0.1\nH1,0.2\n", "twice"),
    ("node,pvalue\nH1,0.1\n", "missing column"),
])
def test_pvalues_errors(diabetes, text, msg):
    with pytest.raises(GraphFileError, match=msg):
        parse_pvalues_csv(text, diabetes, "p.csv")


def test_truth_csv(diabetes):
    t = parse_truth_csv("node,true_null\nH1,true\nH2,0\nH3,false\nH4,1\n", diabetes)
    assert t == [True, False, False, True]
    with pytest.raises(GraphFileError):
        parse_truth_csv("node,true_null\nH1,maybe\n", None)


def test_missing_file():
    with pytest.raises(GraphFileError, match="cannot read"):
        load_graph("/nonexistent/x.graph")
