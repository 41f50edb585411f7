import json
from pathlib import Path

import pytest

from hierdsg.configs import enumerate_discrete, sample_valid
from hierdsg.errors import CycleError, DomainError, ParseError, SchemaError
from hierdsg.graph import EXC
from hierdsg.io import (
    design_space_schema,
    emit_design_space,
    parse_design_space,
    parse_design_space_text,
    parse_point_line,
    read_points,
    write_points,
)
from hierdsg.points import make_point
from hierdsg.problems import get_problem, list_problems

DOCS = Path(__file__).resolve().parents[1] / "docs"


def minimal(**extra):
    doc = {"schema_version": 1, "name": "t", "variables": [{"name": "a", "type": "categorical", "levels": ["x", "y"]}]}
    doc.update(extra)
    return doc


@pytest.mark.parametrize("name", list_problems())
def test_round_trip_preserves_configurations(name):
    g = get_problem(name).graph
    text = emit_design_space(g)
    again = parse_design_space_text(text)
    assert again.nodes == g.nodes
    assert emit_design_space(again) == text
    assert enumerate_discrete(again) == enumerate_discrete(g)


@pytest.mark.parametrize("name", list_problems())
def test_shipped_problem_files_are_current(name):
    path = DOCS / "problems" / f"{name}.json"
    assert path.read_text() == emit_design_space(get_problem(name).graph)
    assert len(enumerate_discrete(parse_design_space(path))) == len(enumerate_discrete(get_problem(name).graph))


def test_shipped_schema_matches_package_copy():
    assert json.loads((DOCS / "design_space.schema.json").read_text()) == design_space_schema()


def test_unknown_key_is_a_schema_error():
    with pytest.raises(SchemaError):
        parse_design_space_text(json.dumps(minimal(surprise=1)))


def test_empty_variable_list():
    with pytest.raises((DomainError, SchemaError)):
        parse_design_space_text(json.dumps(minimal(variables=[])))


def test_json_syntax_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_design_space_text('{\n  "name": \n}')
    assert info.value.line == 3


def test_cycle_in_document():
    doc = minimal(
        variables=[
            {"name": "a", "type": "categorical", "levels": ["x", "y"]},
            {"name": "b", "type": "categorical", "levels": ["x", "y"]},
        ],
        decree_rules=[
            {"parent": "a", "target": "b", "condition": {"in": ["x"]}, "effect": {"kind": "include"}},
            {"parent": "b", "target": "a", "condition": {"in": ["x"]}, "effect": {"kind": "include"}},
        ],
    )
    with pytest.raises(CycleError):
        parse_design_space_text(json.dumps(doc))


def test_point_file_round_trip(tmp_path):
    g = get_problem("mlp").graph
    pts = sample_valid(g, 10, 4)
    path = tmp_path / "pts.txt"
    write_points(g, pts, path)
    rows = read_points(g, path)
    assert [make_point(g, r) for r in rows] == pts


def test_point_line_errors():
    g = get_problem("source_to_consumer").graph
    assert parse_point_line(g, "w_s=1 c2=EXC  # note") == {"w_s": 1, "c2": EXC}
    with pytest.raises(ParseError):
        parse_point_line(g, "ghost=1")
    with pytest.raises(ParseError):
        parse_point_line(g, "w_s=1 w_s=2")
    with pytest.raises(ParseError):
        parse_point_line(g, "w_s")


def test_point_file_reports_line(tmp_path):
    g = get_problem("source_to_consumer").graph
    path = tmp_path / "bad.txt"
    path.write_text("# header\nw_s=1\nnope=2\n")
    with pytest.raises(ParseError) as info:
        read_points(g, path)
    assert info.value.line == 3
