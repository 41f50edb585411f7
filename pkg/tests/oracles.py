"""Reference implementations used only by the tests.

They read the raw declarations of a graph (rules, incompatibilities, orders,
intermediate formulas) and recompute things the slow, obvious way, without
going through the package's support, enumeration, distance or kernel code.
"""

from __future__ import annotations

import itertools
import math
from graphlib import TopologicalSorter

import numpy as np

from hierdsg.graph import ACTIVE, CATEGORICAL, CONTINUOUS, EXC, ORDINAL
from hierdsg.points import ExtendedPoint, is_valid

# -- rule semantics -----------------------------------------------------------


def _condition_holds(cond, value) -> bool:
    if value is EXC:
        return False
    if cond.values is not None:
        return value in cond.values
    if cond.interval is not None:
        return cond.interval[0] <= value <= cond.interval[1]
    return True


def _clause_holds(clause, value) -> bool:
    if value is EXC:
        return False
    ops = {
        "==": lambda a, b: a == b,
        "!=": lambda a, b: a != b,
        "in": lambda a, b: a in b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
    }
    return ops[clause.op](value, clause.value)


def _bound(affine, parent_value):
    return affine.const + affine.slope * parent_value


def node_ok(graph, name, value, assigned) -> bool:
    """Is ``value`` allowed for ``name`` given values for all of its parents?"""
    rules = [r for r in graph.rules if r.target == name]
    fired = [r for r in rules if _condition_holds(r.condition, assigned[r.parent])]
    includes = [r for r in rules if r.effect.kind == "include"]
    fired_includes = [r for r in fired if r.effect.kind == "include"]
    excluded = any(r.effect.kind == "exclude" for r in fired) or (includes and not fired_includes)
    if excluded:
        return value is EXC
    if value is EXC:
        return False
    mids = {m.name: m for m in graph.intermediates}
    if name in mids:
        node = mids[name]
        results = [_clause_holds(c, assigned[c.var]) for c in node.clauses]
        return value == int(all(results) if node.mode == "all" else any(results))
    decl = graph.decl(name)
    if decl.vtype == CONTINUOUS:
        if not decl.domain[0] <= value <= decl.domain[1]:
            return False
    elif value not in decl.domain:
        return False
    if fired_includes and all(r.effect.values is not None for r in fired_includes):
        allowed = set().union(*(r.effect.values for r in fired_includes))
        if value not in allowed:
            return False
    for r in fired:
        if r.effect.kind != "restrict":
            continue
        pv = assigned[r.parent]
        if r.effect.values is not None and value not in r.effect.values:
            return False
        if r.effect.lower is not None and value < _bound(r.effect.lower, pv):
            return False
        if r.effect.upper is not None and value > _bound(r.effect.upper, pv):
            return False
    return True


def _edges_ok(graph, assigned) -> bool:
    for e in graph.incompatibilities:
        if e.a.var in assigned and e.b.var in assigned:
            va, vb = assigned[e.a.var], assigned[e.b.var]
            hit_a = va is not EXC and (e.a.value is None or va == e.a.value)
            hit_b = vb is not EXC and (e.b.value is None or vb == e.b.value)
            if hit_a and hit_b:
                return False
    for o in graph.orders:
        if o.lesser in assigned and o.greater in assigned:
            a, b = assigned[o.lesser], assigned[o.greater]
            if a is EXC or b is EXC:
                continue
            if (o.strict and not a < b) or (not o.strict and not a <= b):
                return False
    return True


def _own_topo_order(graph) -> list[str]:
    deps = {n: set() for n in graph.nodes}
    for r in graph.rules:
        deps[r.target].add(r.parent)
    for m in graph.intermediates:
        deps[m.name].update(m.parents)
    return list(TopologicalSorter(deps).static_order())


def _relevant_continuous(graph) -> set[str]:
    out = set()
    for r in graph.rules:
        out.add(r.parent)
        if r.effect.kind == "restrict":
            out.add(r.target)
    for m in graph.intermediates:
        out.update(c.var for c in m.clauses)
    for e in graph.incompatibilities:
        out.update((e.a.var, e.b.var))
    for o in graph.orders:
        out.update((o.lesser, o.greater))
    return {n for n in out if n in graph.design_names and graph.decl(n).vtype == CONTINUOUS}


def _continuous_grid(graph, name, n=33) -> list[float]:
    lo, hi = graph.decl(name).domain
    values = set(np.linspace(lo, hi, n).tolist())
    for r in graph.rules:
        if r.parent == name and r.condition.interval is not None:
            values.update(r.condition.interval)
    for m in graph.intermediates:
        for c in m.clauses:
            if c.var == name and isinstance(c.value, (int, float)):
                eps = 1e-6 * (hi - lo)
                values.update((c.value - eps, c.value, c.value + eps))
    return sorted(v for v in values if lo <= v <= hi)


def _candidates(graph, name, relevant):
    if name in {m.name for m in graph.intermediates}:
        return [EXC, 0, 1]
    decl = graph.decl(name)
    if decl.vtype != CONTINUOUS:
        return [EXC] + list(decl.domain)
    if name in relevant:
        return [EXC] + _continuous_grid(graph, name)
    lo, hi = decl.domain
    return [EXC, 0.5 * (lo + hi)]


def brute_force_configurations(graph) -> set[tuple]:
    """Every discrete configuration (continuous entries as ACTIVE/EXC) reachable by a valid point.

    Backtracking over each node's candidate values (levels, EXC, and a grid for
    continuous variables that influence others), checking each node's rules as
    soon as its parents are set.
    """
    order = _own_topo_order(graph)
    relevant = _relevant_continuous(graph)
    cands = {n: _candidates(graph, n, relevant) for n in order}
    is_cont = {n: n in graph.design_names and graph.decl(n).vtype == CONTINUOUS for n in graph.nodes}
    found: set[tuple] = set()
    assigned: dict = {}

    def walk(i):
        if i == len(order):
            found.add(tuple(
                (ACTIVE if assigned[n] is not EXC else EXC) if is_cont[n] else assigned[n] for n in graph.nodes
            ))
            return
        name = order[i]
        for v in cands[name]:
            if not node_ok(graph, name, v, assigned):
                continue
            assigned[name] = v
            if _edges_ok(graph, assigned):
                walk(i + 1)
            del assigned[name]

    walk(0)
    return found


def product_filter_count(graph, grid=5) -> int:
    """Count of discrete configurations found by filtering the full Cartesian product with ``is_valid``.

    Continuous variables range over EXC and a small grid of values.
    """
    axes = []
    for name in graph.nodes:
        decl = graph.decl(name)
        if decl.vtype == CONTINUOUS:
            lo, hi = decl.domain
            axes.append([EXC] + np.linspace(lo, hi, grid).tolist())
        else:
            axes.append([EXC] + list(decl.levels))
    configs = set()
    cont = [graph.decl(n).vtype == CONTINUOUS for n in graph.nodes]
    for combo in itertools.product(*axes):
        if is_valid(graph, ExtendedPoint(combo)).valid:
            configs.add(tuple((ACTIVE if v is not EXC else EXC) if c else v for v, c in zip(combo, cont)))
    return len(configs)


def declared_count(graph) -> int:
    return math.prod(len(graph.decl(n).domain) for n in graph.design_names if graph.decl(n).vtype != CONTINUOUS)


# -- distances ----------------------------------------------------------------


def _code(decl, v):
    if decl.vtype == CONTINUOUS:
        lo, hi = decl.domain
        return (v - lo) / (hi - lo)
    levels = list(decl.domain)
    if decl.vtype == CATEGORICAL:
        return levels.index(v)
    if decl.vtype == ORDINAL:
        return levels.index(v) / (len(levels) - 1) if len(levels) > 1 else 0.0
    lo, hi = levels[0], levels[-1]
    return (v - lo) / (hi - lo) if hi > lo else 0.0


def alg(a, b):
    return abs(a - b) / (math.sqrt(a * a + 1) * math.sqrt(b * b + 1))


def hand_per_var(decl, v, w, theta, delta):
    if v is EXC and w is EXC:
        return 0.0
    if v is EXC or w is EXC:
        return delta
    a, b = _code(decl, v), _code(decl, w)
    if decl.vtype == CATEGORICAL:
        return 0.0 if v == w else theta
    if decl.vtype == ORDINAL:
        return theta * abs(a - b)
    return theta * alg(a, b)


def hand_distance(graph, x, y, theta=None, delta=None, p=2.0):
    names = graph.design_names
    theta = theta or [1.0] * len(names)
    delta = delta or [0.5 * t for t in theta]
    terms = [hand_per_var(graph.decl(n), x.values[i], y.values[i], theta[i], delta[i]) for i, n in enumerate(names)]
    return sum(t**p for t in terms) ** (1.0 / p)


# -- kernels ------------------------------------------------------------------


def _structure(graph):
    parents = {n: set() for n in graph.nodes}
    children = {n: set() for n in graph.nodes}
    for r in graph.rules:
        parents[r.target].add(r.parent)
        children[r.parent].add(r.target)
    for m in graph.intermediates:
        for p in m.parents:
            parents[m.name].add(p)
            children[p].add(m.name)
    neu = [n for n in graph.design_names if not parents[n] and not children[n]]
    meta = [n for n in graph.design_names if not parents[n] and children[n]]
    dec = [n for n in graph.design_names if parents[n]]
    return neu, meta, dec


def hand_hier(graph, x, y, theta_neu, theta_meta, theta_dec, sigma2=1.0):
    neu, meta, dec = _structure(graph)
    idx = {n: i for i, n in enumerate(graph.nodes)}
    s = 0.0
    for t, n in zip(theta_neu, neu):
        s += hand_per_var(graph.decl(n), x.values[idx[n]], y.values[idx[n]], t, 0.5 * t)
    for t, n in zip(theta_meta, meta):
        decl = graph.decl(n)
        v, w = x.values[idx[n]], y.values[idx[n]]
        if decl.vtype == CATEGORICAL:
            d = 0.0 if v == w else 1.0
        elif decl.vtype == CONTINUOUS:
            d = alg(_code(decl, v), _code(decl, w))
        else:
            levels = list(decl.domain)
            d = abs(levels.index(v) - levels.index(w)) / (len(levels) - 1) if len(levels) > 1 else 0.0
        s += t * d
    for t, n in zip(theta_dec, meta + dec):
        s += hand_per_var(graph.decl(n), x.values[idx[n]], y.values[idx[n]], t, 0.5 * t)
    return sigma2 * math.exp(-s)


def hand_gower(graph, x, y, theta, sigma2=1.0):
    names = graph.design_names
    total = 0.0
    for i, n in enumerate(names):
        decl = graph.decl(n)
        v, w = x.values[i], y.values[i]
        if v is EXC and w is EXC:
            d = 0.0
        elif v is EXC or w is EXC:
            d = 0.5
        elif decl.vtype == CATEGORICAL:
            d = 0.0 if v == w else 1.0
        else:
            d = abs(_code(decl, v) - _code(decl, w))
        total += theta[i] * d
    return sigma2 * math.exp(-total / len(names))


def hand_cr(graph, x, y, theta, sigma2=1.0):
    s = 0.0
    k = 0
    for i, n in enumerate(graph.design_names):
        decl = graph.decl(n)
        v, w = x.values[i], y.values[i]
        if decl.vtype == CATEGORICAL:
            for level in decl.domain:
                a = 1.0 if v == level else 0.0
                b = 1.0 if w == level else 0.0
                s += theta[k] * abs(a - b)
                k += 1
        else:
            s += hand_per_var(decl, v, w, 1.0, 0.5) * theta[k]
            k += 1
    return sigma2 * math.exp(-s)
