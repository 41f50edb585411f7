"""Extended points: validity checks, correction and the greedy fast decoder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError, WidthError
from .graph import (
    ACTIVE,
    EXC,
    ORDINAL,
    DesignSpaceGraph,
    VariableDecl,
    _is_number,
    compute_support,
)

#: Relative gap used to make strict order relations hold on continuous variables.
ORDER_EPSILON = 1e-9


@dataclass(frozen=True)
class ExtendedPoint:
    """Full-length point: a value or :data:`EXC` for every node of the graph."""

    values: tuple
    active: tuple[bool, ...] = None

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        derived = tuple(v is not EXC for v in values)
        if self.active is None:
            object.__setattr__(self, "active", derived)
        else:
            active = tuple(bool(a) for a in self.active)
            if active != derived:
                raise ValueError("activeness mask disagrees with EXC entries")
            object.__setattr__(self, "active", active)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Any:
        return self.values[i]

    def as_dict(self, graph: DesignSpaceGraph) -> dict[str, Any]:
        _check_width(graph, self)
        return dict(zip(graph.nodes, self.values))


def make_point(graph: DesignSpaceGraph, values: Mapping[str, Any] | Sequence[Any]) -> ExtendedPoint:
    """Build a point from a name->value mapping (missing names become EXC) or a full sequence."""
    if isinstance(values, Mapping):
        for name in values:
            graph.index(name)
        return ExtendedPoint(tuple(values.get(n, EXC) for n in graph.nodes))
    point = ExtendedPoint(tuple(values))
    _check_width(graph, point)
    return point


def _check_width(graph: DesignSpaceGraph, point: ExtendedPoint) -> None:
    if len(point.values) != graph.width:
        raise WidthError(f"point has {len(point.values)} entries, design space has {graph.width}")


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.valid


def _conflicts(graph: DesignSpaceGraph, name: str, value: Any, assigned: Mapping[str, Any]) -> str | None:
    """Name of an incompatibility violated by setting ``name`` to ``value``, if any."""
    for mine, other in graph.incompatibilities_of(name):
        if other.var == name or other.var not in assigned:
            continue
        if mine.matches(value) and other.matches(assigned[other.var]):
            return _edge_label(mine, other)
    return None


def _edge_label(a, b) -> str:
    def side(ep):
        return ep.var if ep.value is None else f"{ep.var}={ep.value!r}"

    return f"{side(a)} -- {side(b)}"


def _order_window(graph: DesignSpaceGraph, name: str, assigned: Mapping[str, Any]):
    """Bounds imposed on ``name`` by order relations with already-assigned variables.

    Returns ``(lo, lo_strict, hi, hi_strict)``.
    """
    lo, hi = -math.inf, math.inf
    lo_strict = hi_strict = False
    for rel in graph.orders_of(name):
        if rel.lesser == name:
            other = assigned.get(rel.greater, EXC)
            if _is_number(other) and (other < hi or (other == hi and rel.strict)):
                hi, hi_strict = other, rel.strict
        else:
            other = assigned.get(rel.lesser, EXC)
            if _is_number(other) and (other > lo or (other == lo and rel.strict)):
                lo, lo_strict = other, rel.strict
    return lo, lo_strict, hi, hi_strict


def _lookahead(graph: DesignSpaceGraph, name: str, assigned: Mapping[str, Any], window):
    """Tighten ``window`` so unassigned order partners keep room inside their declared domains."""
    lo, lo_strict, hi, hi_strict = window
    for rel in graph.orders_of(name):
        other = rel.greater if rel.lesser == name else rel.lesser
        if other in assigned or not graph.decl(other).is_numeric:
            continue
        domain = graph.decl(other).domain
        if rel.lesser == name:
            top = domain[1] if graph.decl(other).is_continuous else max(domain)
            if top < hi or (top == hi and rel.strict):
                hi, hi_strict = top, rel.strict
        else:
            bottom = domain[0] if graph.decl(other).is_continuous else min(domain)
            if bottom > lo or (bottom == lo and rel.strict):
                lo, lo_strict = bottom, rel.strict
    return lo, lo_strict, hi, hi_strict


def _continuous_window(decl: VariableDecl, lo: float, hi: float, window) -> tuple[float, float] | None:
    wlo, wlo_strict, whi, whi_strict = window
    eps = ORDER_EPSILON * (decl.domain[1] - decl.domain[0])
    if wlo_strict:
        wlo = wlo + eps
    if whi_strict:
        whi = whi - eps
    lo, hi = max(lo, wlo), min(hi, whi)
    return (lo, hi) if lo <= hi else None


def _in_window(value: Any, window) -> bool:
    wlo, wlo_strict, whi, whi_strict = window
    if wlo_strict and not value > wlo or not wlo_strict and not value >= wlo:
        return False
    if whi_strict and not value < whi or not whi_strict and not value <= whi:
        return False
    return True


def is_valid(graph: DesignSpaceGraph, point: ExtendedPoint) -> ValidityReport:
    """Check supports, intermediate-node values, incompatibilities and order relations."""
    _check_width(graph, point)
    values = dict(zip(graph.nodes, point.values))
    violations: list[str] = []
    for name in graph.topo_order:
        decl = graph.decl(name)
        value = values[name]
        if value is not EXC and not decl.contains(value):
            violations.append(f"{name}: {value!r} is outside the declared domain")
            continue
        sup = compute_support(graph, name, values)
        if sup.empty:
            if value is not EXC:
                violations.append(f"{name}: excluded by its parents but has value {value!r}")
        elif value is EXC:
            violations.append(f"{name}: included by its parents but set to EXC")
        elif not sup.contains(value):
            if graph.is_intermediate(name):
                violations.append(f"{name}: holds {value!r}, its formula gives {sup.values[0]!r}")
            else:
                violations.append(f"{name}: {value!r} is not admissible here")
    for edge in graph.incompatibilities:
        if edge.a.matches(values[edge.a.var]) and edge.b.matches(values[edge.b.var]):
            violations.append(f"incompatibility violated: {_edge_label(edge.a, edge.b)}")
    for rel in graph.orders:
        a, b = values[rel.lesser], values[rel.greater]
        if _is_number(a) and _is_number(b):
            if (rel.strict and not a < b) or (not rel.strict and not a <= b):
                sign = "<" if rel.strict else "<="
                violations.append(f"order violated: {rel.lesser} {sign} {rel.greater} ({a!r} vs {b!r})")
    return ValidityReport(not violations, tuple(violations))


def _finite_preference(decl: VariableDecl, admissible: Sequence[Any], raw: Any) -> list:
    """Admissible levels, best first, for snapping ``raw``."""
    admissible = list(admissible)
    if raw is None or raw is EXC:
        return admissible
    if decl.is_numeric and _is_number(raw):
        return sorted(admissible, key=lambda v: (abs(v - raw), v))
    if decl.vtype == ORDINAL and raw in decl.domain:
        ranks = {v: i for i, v in enumerate(decl.domain)}
        r = ranks[raw]
        return sorted(admissible, key=lambda v: (abs(ranks[v] - r), ranks[v]))
    if raw in admissible:
        admissible.remove(raw)
        return [raw] + admissible
    return admissible


def _candidates(graph: DesignSpaceGraph, name: str, assigned: dict, raw: Any) -> Iterator[Any]:
    decl = graph.decl(name)
    sup = compute_support(graph, name, assigned)
    if sup.empty:
        if _conflicts(graph, name, EXC, assigned) is None:
            yield EXC
        return
    window = _order_window(graph, name, assigned)
    if decl.is_continuous:
        bounds = _continuous_window(decl, *sup.interval, _lookahead(graph, name, assigned, window))
        if bounds is None:
            bounds = _continuous_window(decl, *sup.interval, window)
        if bounds is None:
            return
        lo, hi = bounds
        if _is_number(raw) and math.isfinite(raw):
            value = float(min(max(raw, lo), hi))
        else:
            value = 0.5 * (lo + hi)
        if _conflicts(graph, name, value, assigned) is None:
            yield value
        return
    admissible = [v for v in sup.values if _in_window(v, window)] if decl.is_numeric else sup.values
    for value in _finite_preference(decl, admissible, raw):
        if _conflicts(graph, name, value, assigned) is None:
            yield value


def correct(graph: DesignSpaceGraph, raw: Mapping[str, Any]) -> tuple[ExtendedPoint, np.ndarray]:
    """Project a raw assignment onto the nearest valid point.

    Variables are visited in topological order. Excluded variables become EXC,
    included ones keep their raw value when admissible and are snapped to the
    nearest admissible value otherwise (ties go to the lower value; categorical
    values fall back to the first admissible level). Missing values take the
    interval midpoint or the first admissible level. When incompatibility or
    order edges leave a variable without any choice, earlier discrete choices
    are revisited in preference order.
    """
    for name in raw:
        graph.index(name)
    order = graph.topo_order
    assigned: dict[str, Any] = {}
    stack: list[Iterator[Any]] = []
    i = 0
    while i < len(order):
        name = order[i]
        if len(stack) == i:
            stack.append(_candidates(graph, name, assigned, raw.get(name)))
        value = next(stack[i], _EXHAUSTED)
        if value is _EXHAUSTED:
            stack.pop()
            assigned.pop(name, None)
            i -= 1
            if i < 0:
                raise InfeasibleError(f"no valid completion exists (dead end at {name!r})")
            continue
        assigned[name] = value
        i += 1
    point = ExtendedPoint(tuple(assigned[n] for n in graph.nodes))
    return point, np.array(point.active, dtype=bool)


_EXHAUSTED = object()


def encode_configuration(graph: DesignSpaceGraph, config: Mapping[str, Any]) -> tuple[int, ...]:
    """Level indices over :attr:`DesignSpaceGraph.config_names`; excluded entries map to 0."""
    out = []
    for name in graph.config_names:
        value = config.get(name, EXC)
        out.append(0 if value is EXC else graph.decl(name).level_index(value))
    return tuple(out)


def abstract_candidates(graph: DesignSpaceGraph, name: str, assigned: dict, intervals: dict) -> list:
    """Possible abstract values of ``name`` when continuous variables are only ACTIVE/EXC.

    ``intervals`` maps active continuous variables to their widest support and
    is used to decide which values an intermediate node can take.
    """
    decl = graph.decl(name)
    sup = compute_support(graph, name, assigned)
    if sup.empty:
        return [EXC] if _conflicts(graph, name, EXC, assigned) is None else []
    if decl.is_continuous:
        intervals[name] = sup.interval
        return [ACTIVE] if _conflicts(graph, name, ACTIVE, assigned) is None else []
    if graph.is_intermediate(name):
        node = graph.intermediate(name)
        if len(sup.values) == 2:
            values = [v for v in (0, 1) if _mid_possible(node, assigned, intervals, bool(v))]
        else:
            values = list(sup.values)
    else:
        window = _order_window(graph, name, assigned)
        values = [v for v in sup.values if _in_window(v, window)] if decl.is_numeric else list(sup.values)
    return [v for v in values if _conflicts(graph, name, v, assigned) is None]


def _mid_possible(node, assigned, intervals, truth: bool) -> bool:
    """Can the node's formula evaluate to ``truth``? Clauses are treated independently."""
    outcomes = []
    for clause in node.clauses:
        value = assigned[clause.var]
        if value is ACTIVE:
            lo, hi = intervals[clause.var]
            outcomes.append((clause.possible(lo, hi, True), clause.possible(lo, hi, False)))
        else:
            held = clause.holds(value)
            outcomes.append((held, not held))
    can_true = [t for t, _ in outcomes]
    can_false = [f for _, f in outcomes]
    if node.mode == "all":
        return all(can_true) if truth else any(can_false)
    return any(can_true) if truth else all(can_false)


def decode_fast(graph: DesignSpaceGraph, raw: Sequence[int]) -> tuple:
    """Greedy decode of a raw level-index vector over ``graph.config_names``.

    Roots keep their raw level; every other node is clamped into its support
    given the choices made so far. Returns values over ``config_names`` with
    EXC for excluded entries. No backtracking is done.
    """
    names = graph.config_names
    if len(raw) != len(names):
        raise WidthError(f"raw vector has {len(raw)} entries, expected {len(names)}")
    wanted = {}
    for name, idx in zip(names, raw):
        levels = graph.decl(name).levels
        if not 0 <= int(idx) < len(levels):
            raise DomainError(f"{name}: level index {idx} out of range")
        wanted[name] = levels[int(idx)]
    assigned: dict[str, Any] = {}
    intervals: dict[str, tuple] = {}
    for name in graph.topo_order:
        options = abstract_candidates(graph, name, assigned, intervals)
        if not options:
            raise InfeasibleError(f"fast decoding reached a dead end at {name!r}")
        if name in wanted and options[0] is not EXC:
            options = _finite_preference(graph.decl(name), options, wanted[name])
        assigned[name] = options[0]
    return tuple(assigned[n] for n in names)
