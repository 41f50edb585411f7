import re

from hierdsg.dot import to_dot
from hierdsg.graph import CATEGORICAL, Condition, DecreeRule, Effect, VariableDecl, build_graph
from hierdsg.problems import get_problem


def edge_lines(text):
    return [line for line in text.splitlines() if re.match(r'\s*"v:[^"]+" -> "v:', line)]


def test_single_variable_has_no_arcs():
    text = to_dot(build_graph([VariableDecl("a", CATEGORICAL, ("x",))], name="one"))
    assert text.startswith('digraph "one" {') and text.rstrip().endswith("}")
    assert edge_lines(text) == []


def test_two_node_chain_has_one_arc():
    decls = [VariableDecl("a", CATEGORICAL, ("x", "y")), VariableDecl("b", CATEGORICAL, ("u", "v"))]
    rule = DecreeRule("a", "b", Effect.include(), Condition(values=("x",)))
    arcs = edge_lines(to_dot(build_graph(decls, [rule], name="chain")))
    assert len(arcs) == 1 and '"v:a" -> "v:b"' in arcs[0]


def test_incompatibility_edge_is_dashed_red():
    text = to_dot(get_problem("hybrid_energy").graph)
    dashed = [line for line in text.splitlines() if "style=dashed, color=red" in line]
    assert len(dashed) == 1
    assert "dir=none" in dashed[0]


def test_partial_decree_labelled_and_stable():
    g = get_problem("source_to_consumer").graph
    text = to_dot(g)
    assert "partial decree" in text
    assert "c2:decreed/partially-decreed" in text
    assert to_dot(g) == text
