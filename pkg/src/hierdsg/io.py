"""Design-space JSON documents and point files."""

from __future__ import annotations

import json
import math
import shlex
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema

from .errors import DomainError, ParseError, SchemaError
from .graph import (
    EXC,
    Affine,
    Clause,
    Condition,
    DecreeRule,
    DesignSpaceGraph,
    Effect,
    Endpoint,
    IncompatibilityEdge,
    IntermediateNode,
    OrderRelation,
    VariableDecl,
    build_graph,
)
from .points import ExtendedPoint

SCHEMA_VERSION = 1


@lru_cache(maxsize=1)
def design_space_schema() -> dict:
    text = resources.files("hierdsg").joinpath("design_space.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _schema_error(doc: Any) -> SchemaError | None:
    validator = jsonschema.Draft202012Validator(design_space_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is None:
        return None
    path = tuple(error.absolute_path)
    where = "/".join(str(p) for p in path) or "<root>"
    # oneOf failures hide the useful message one level down.
    leaf = error
    while leaf.context:
        leaf = jsonschema.exceptions.best_match(leaf.context)
        path = tuple(leaf.absolute_path)
        where = "/".join(str(p) for p in path) or "<root>"
    return SchemaError(f"schema violation at {where}: {leaf.message}", path)


def _bound_from_json(obj: Any) -> Affine | None:
    if obj is None:
        return None
    if isinstance(obj, dict):
        return Affine(float(obj["const"]), float(obj.get("slope", 0.0)))
    return Affine(float(obj))


def _bound_to_json(bound: Affine | None) -> Any:
    if bound is None:
        return None
    if bound.slope == 0.0:
        return _num(bound.const)
    return {"const": _num(bound.const), "slope": _num(bound.slope)}


def _num(x: float) -> int | float:
    return int(x) if float(x).is_integer() and abs(x) < 2**53 else float(x)


def graph_from_document(doc: Mapping[str, Any]) -> DesignSpaceGraph:
    """Build a graph from an already-decoded JSON document (schema-checked)."""
    err = _schema_error(doc)
    if err is not None:
        raise err
    if not doc["variables"]:
        raise DomainError("design space declares no variables")
    decls = []
    for v in doc["variables"]:
        domain = v["bounds"] if v["type"] == "continuous" else v["levels"]
        decls.append(VariableDecl(v["name"], v["type"], tuple(domain)))
    rules = []
    for r in doc.get("decree_rules", []):
        cond = r.get("condition", {})
        condition = Condition(
            values=tuple(cond["in"]) if "in" in cond else None,
            interval=tuple(cond["interval"]) if "interval" in cond else None,
        )
        e = r["effect"]
        effect = Effect(
            e["kind"],
            tuple(e["values"]) if "values" in e else None,
            _bound_from_json(e.get("lower")),
            _bound_from_json(e.get("upper")),
        )
        rules.append(DecreeRule(r["parent"], r["target"], effect, condition))
    incompat = [
        IncompatibilityEdge(Endpoint(i["a"]["var"], i["a"].get("value")), Endpoint(i["b"]["var"], i["b"].get("value")))
        for i in doc.get("incompatibilities", [])
    ]
    orders = [OrderRelation(o["lesser"], o["greater"], o.get("strict", True)) for o in doc.get("order_relations", [])]
    mids = [
        IntermediateNode(
            m["name"],
            tuple(m["parents"]),
            tuple(Clause(c["var"], c["op"], c["value"]) for c in m["clauses"]),
            m.get("mode", "all"),
        )
        for m in doc.get("intermediate_nodes", [])
    ]
    return build_graph(decls, rules, incompat, orders, mids, name=doc.get("name", "design_space"))


def parse_design_space_text(text: str) -> DesignSpaceGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return graph_from_document(doc)


def parse_design_space(path: str | Path) -> DesignSpaceGraph:
    """Read a design-space JSON file and build its graph."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_design_space_text(text)


def design_space_document(graph: DesignSpaceGraph) -> dict:
    """Canonical JSON-ready document for ``graph``."""
    variables = []
    for d in graph.variables:
        if d.is_continuous:
            variables.append({"name": d.name, "type": d.vtype, "bounds": [_num(d.domain[0]), _num(d.domain[1])]})
        else:
            variables.append({"name": d.name, "type": d.vtype, "levels": list(d.domain)})
    rules = []
    for r in graph.rules:
        item: dict[str, Any] = {"parent": r.parent, "target": r.target}
        if r.condition.values is not None:
            item["condition"] = {"in": list(r.condition.values)}
        elif r.condition.interval is not None:
            item["condition"] = {"interval": [_num(b) for b in r.condition.interval]}
        effect: dict[str, Any] = {"kind": r.effect.kind}
        if r.effect.values is not None:
            effect["values"] = list(r.effect.values)
        if r.effect.lower is not None:
            effect["lower"] = _bound_to_json(r.effect.lower)
        if r.effect.upper is not None:
            effect["upper"] = _bound_to_json(r.effect.upper)
        item["effect"] = effect
        rules.append(item)

    def endpoint(ep: Endpoint) -> dict:
        return {"var": ep.var} if ep.value is None else {"var": ep.var, "value": ep.value}

    return {
        "schema_version": SCHEMA_VERSION,
        "name": graph.name,
        "variables": variables,
        "decree_rules": rules,
        "incompatibilities": [{"a": endpoint(e.a), "b": endpoint(e.b)} for e in graph.incompatibilities],
        "order_relations": [
            {"lesser": o.lesser, "greater": o.greater, "strict": o.strict} for o in graph.orders
        ],
        "intermediate_nodes": [
            {
                "name": m.name,
                "parents": list(m.parents),
                "mode": m.mode,
                "clauses": [
                    {"var": c.var, "op": c.op, "value": list(c.value) if c.op == "in" else c.value}
                    for c in m.clauses
                ],
            }
            for m in graph.intermediates
        ],
    }


def emit_design_space(graph: DesignSpaceGraph) -> str:
    return json.dumps(design_space_document(graph), indent=2) + "\n"


# -- point files --------------------------------------------------------------


def parse_value(graph: DesignSpaceGraph, name: str, token: str) -> Any:
    """Decode one ``value`` token for variable ``name``."""
    if token == "EXC":
        return EXC
    decl = graph.decl(name)
    if decl.is_continuous:
        try:
            value = float(token)
        except ValueError:
            raise ParseError(f"{name}: {token!r} is not a number") from None
        if not math.isfinite(value):
            raise ParseError(f"{name}: {token!r} is not finite")
        return value
    for level in decl.domain:
        if str(level) == token:
            return level
    if decl.is_numeric:
        try:
            value = float(token)
        except ValueError:
            raise ParseError(f"{name}: {token!r} is not a number") from None
        return int(value) if value.is_integer() else value
    # Unknown categorical level: keep the text so correction can replace it.
    return token


def parse_point_line(graph: DesignSpaceGraph, line: str, lineno: int | None = None) -> dict[str, Any]:
    try:
        tokens = shlex.split(line, comments=True)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    out: dict[str, Any] = {}
    for token in tokens:
        name, sep, text = token.partition("=")
        if not sep:
            raise ParseError(f"expected name=value, got {token!r}", lineno)
        if name not in graph.nodes:
            raise ParseError(f"unknown variable {name!r}", lineno)
        if name in out:
            raise ParseError(f"variable {name!r} given twice", lineno)
        out[name] = parse_value(graph, name, text)
    return out


def read_points(graph: DesignSpaceGraph, path: str | Path) -> list[dict[str, Any]]:
    """Read a point file: one point per line as ``name=value`` pairs; blank lines and ``#`` comments skipped."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rows.append(parse_point_line(graph, line, lineno))
    return rows


def format_value(value: Any) -> str:
    if value is EXC:
        return "EXC"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_point(graph: DesignSpaceGraph, point: ExtendedPoint | Mapping[str, Any]) -> str:
    values = point if isinstance(point, Mapping) else point.as_dict(graph)
    parts = []
    for name in graph.nodes:
        if name in values:
            parts.append(shlex.quote(f"{name}={format_value(values[name])}"))
    return " ".join(parts)


def write_points(graph: DesignSpaceGraph, points: Iterable[ExtendedPoint | Mapping[str, Any]], path: str | Path) -> None:
    text = "".join(format_point(graph, p) + "\n" for p in points)
    Path(path).write_text(text, encoding="utf-8")
