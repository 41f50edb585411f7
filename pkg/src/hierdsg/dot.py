"""Graphviz DOT rendering of a design-space graph."""

from __future__ import annotations

from typing import Any

from .graph import EXCLUDE, INCLUDE, DesignSpaceGraph, DecreeRule, Effect, Endpoint


def _q(text: Any) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _var_id(name: str) -> str:
    return _q(f"v:{name}")


def _level_id(name: str, index: int) -> str:
    return _q(f"l:{name}:{index}")


def _fmt_values(values) -> str:
    return "{" + ", ".join(str(v) for v in values) + "}"


def _fmt_bound(bound, parent: str) -> str:
    if bound is None:
        return ""
    if bound.slope == 0:
        return f"{bound.const:g}"
    slope = "" if bound.slope == 1 else f"{bound.slope:g}*"
    const = "" if bound.const == 0 else f"{bound.const:+g}"
    return f"{slope}{parent}{const}"


def _rule_label(rule: DecreeRule) -> str:
    cond = rule.condition
    if cond.values is not None:
        when = f"{rule.parent} in {_fmt_values(cond.values)}"
    elif cond.interval is not None:
        when = f"{rule.parent} in [{cond.interval[0]:g}, {cond.interval[1]:g}]"
    else:
        when = ""
    eff: Effect = rule.effect
    if eff.kind == INCLUDE:
        what = "decree" if eff.values is None else f"decree {_fmt_values(eff.values)}"
    elif eff.kind == EXCLUDE:
        what = "exclude"
    elif eff.values is not None:
        what = f"partial decree {_fmt_values(eff.values)}"
    else:
        lo = _fmt_bound(eff.lower, rule.parent) or "-inf"
        hi = _fmt_bound(eff.upper, rule.parent) or "+inf"
        what = f"partial decree [{lo}, {hi}]"
    return f"{what} if {when}" if when else what


def _endpoint_id(graph: DesignSpaceGraph, ep: Endpoint) -> str:
    if ep.value is None:
        return _var_id(ep.var)
    return _level_id(ep.var, graph.decl(ep.var).level_index(ep.value))


def to_dot(graph: DesignSpaceGraph) -> str:
    """DOT text for the graph.

    Variable nodes are labeled ``name:role`` and carry their levels (or bounds)
    as child nodes linked by undirected dotted edges. Decree rules are the only
    directed edges; restricting rules carry a "partial decree" label.
    Incompatibilities are undirected dashed red edges, order relations
    undirected dashed blue ones.
    """
    lines = [f"digraph {_q(graph.name)} {{"]
    for decl in graph.variables:
        role = graph.roles[decl.name].label
        lines.append(f"  {_var_id(decl.name)} [label={_q(decl.name + ':' + role)}, shape=ellipse];")
        if decl.is_continuous:
            bound = f"b:{decl.name}"
            label = f"[{decl.domain[0]:g}, {decl.domain[1]:g}]"
            lines.append(f"  {_q(bound)} [label={_q(label)}, shape=box, style=dashed];")
            lines.append(f"  {_var_id(decl.name)} -> {_q(bound)} [dir=none, style=dotted];")
        else:
            for i, level in enumerate(decl.domain):
                lines.append(f"  {_level_id(decl.name, i)} [label={_q(level)}, shape=box, style=rounded];")
                lines.append(f"  {_var_id(decl.name)} -> {_level_id(decl.name, i)} [dir=none, style=dotted];")
    for node in graph.intermediates:
        joiner = " and " if node.mode == "all" else " or "
        formula = joiner.join(f"{c.var} {c.op} {c.value}" for c in node.clauses)
        label = f"{node.name}:{graph.roles[node.name].label}\\n{formula}"
        lines.append(f"  {_var_id(node.name)} [label={_q(label)}, shape=diamond];")
    for rule in graph.rules:
        attrs = [f"label={_q(_rule_label(rule))}"]
        if rule.effect.kind == EXCLUDE:
            attrs.append("arrowhead=tee")
        lines.append(f"  {_var_id(rule.parent)} -> {_var_id(rule.target)} [{', '.join(attrs)}];")
    for node in graph.intermediates:
        for parent in node.parents:
            lines.append(f"  {_var_id(parent)} -> {_var_id(node.name)} [style=bold];")
    for edge in graph.incompatibilities:
        a, b = _endpoint_id(graph, edge.a), _endpoint_id(graph, edge.b)
        lines.append(f'  {a} -> {b} [dir=none, style=dashed, color=red, label="incomp."];')
    for rel in graph.orders:
        sign = "<" if rel.strict else "<="
        lines.append(
            f"  {_var_id(rel.lesser)} -> {_var_id(rel.greater)} "
            f"[dir=none, style=dashed, color=blue, label={_q(sign)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
