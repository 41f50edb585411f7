"""Declarations, decree rules and the immutable design-space graph.

A design space is a set of typed variables plus decree rules: a rule says
that when its parent takes certain values, the target variable is included
(possibly with a reduced set of levels), excluded, or has its bounds
restricted. Incompatibility edges forbid combinations, order relations
force one quantitative variable below another, and intermediate nodes
carry derived 0/1 logic that other rules can condition on.
"""

from __future__ import annotations

import graphlib
import heapq
import math
import numbers
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    CycleError,
    DanglingReferenceError,
    DomainError,
    InfeasibleError,
    MissingParentError,
)

CONTINUOUS = "continuous"
INTEGER = "integer"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"
VARIABLE_TYPES = (CONTINUOUS, INTEGER, ORDINAL, CATEGORICAL)

INCLUDE = "include"
EXCLUDE = "exclude"
RESTRICT = "restrict"
EFFECT_KINDS = (INCLUDE, EXCLUDE, RESTRICT)

CLAUSE_OPS = ("<", "<=", ">", ">=", "==", "!=", "in")


class _Marker:
    """Named singleton used as a sentinel value inside points."""

    _registry: dict[str, "_Marker"] = {}

    def __new__(cls, label: str):
        existing = cls._registry.get(label)
        if existing is not None:
            return existing
        obj = super().__new__(cls)
        obj._label = label
        cls._registry[label] = obj
        return obj

    def __repr__(self) -> str:
        return self._label

    __str__ = __repr__

    def __reduce__(self):
        return (_Marker, (self._label,))

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


#: Value of an excluded variable.
EXC = _Marker("EXC")
#: Placeholder for an included continuous variable in a discrete configuration.
ACTIVE = _Marker("ACTIVE")


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


@dataclass(frozen=True)
class VariableDecl:
    """A typed design variable.

    ``domain`` is ``(lower, upper)`` for continuous variables and the tuple of
    levels otherwise. Integer levels must be strictly increasing; ordinal levels
    are ranked in the order given.
    """

    name: str
    vtype: str
    domain: tuple

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise DomainError(f"variable name must be a non-empty string, got {self.name!r}")
        if self.vtype not in VARIABLE_TYPES:
            raise DomainError(f"{self.name}: unknown variable type {self.vtype!r}")
        domain = tuple(self.domain)
        if self.vtype == CONTINUOUS:
            if len(domain) != 2 or not all(_is_number(b) for b in domain):
                raise DomainError(f"{self.name}: continuous domain must be (lower, upper)")
            lower, upper = float(domain[0]), float(domain[1])
            if not (math.isfinite(lower) and math.isfinite(upper)):
                raise DomainError(f"{self.name}: continuous bounds must be finite")
            if not lower < upper:
                raise DomainError(f"{self.name}: lower bound {lower} is not below upper bound {upper}")
            domain = (lower, upper)
        else:
            if not domain:
                raise DomainError(f"{self.name}: finite domain is empty")
            if len(set(domain)) != len(domain):
                raise DomainError(f"{self.name}: finite domain has duplicate levels")
            if self.vtype == INTEGER:
                if not all(isinstance(v, numbers.Integral) and not isinstance(v, bool) for v in domain):
                    raise DomainError(f"{self.name}: integer domain must contain integers")
                domain = tuple(int(v) for v in domain)
                if any(a >= b for a, b in zip(domain, domain[1:])):
                    raise DomainError(f"{self.name}: integer levels must be strictly increasing")
        object.__setattr__(self, "domain", domain)

    @property
    def is_continuous(self) -> bool:
        return self.vtype == CONTINUOUS

    @property
    def is_discrete(self) -> bool:
        return self.vtype != CONTINUOUS

    @property
    def is_quantitative(self) -> bool:
        return self.vtype != CATEGORICAL

    @property
    def is_numeric(self) -> bool:
        """True when values can be compared with numbers (used by intervals)."""
        if self.vtype in (CONTINUOUS, INTEGER):
            return True
        if self.vtype == ORDINAL:
            return all(_is_number(v) for v in self.domain)
        return False

    @property
    def levels(self) -> tuple:
        if self.is_continuous:
            raise DomainError(f"{self.name}: continuous variables have no levels")
        return self.domain

    @property
    def lower(self) -> float:
        return self.domain[0] if self.is_continuous else min(self.domain)

    @property
    def upper(self) -> float:
        return self.domain[1] if self.is_continuous else max(self.domain)

    def contains(self, value: Any) -> bool:
        if value is EXC or value is ACTIVE:
            return False
        if self.is_continuous:
            return _is_number(value) and self.domain[0] <= value <= self.domain[1]
        try:
            return value in self.domain
        except TypeError:
            return False

    def level_index(self, value: Any) -> int:
        for i, level in enumerate(self.domain):
            if level == value:
                return i
        raise DomainError(f"{self.name}: {value!r} is not a declared level")


@dataclass(frozen=True)
class Condition:
    """When a decree rule fires, given its parent's value.

    With ``values`` set the parent must be one of them; with ``interval`` set a
    numeric parent must lie in the closed interval. With neither, the rule fires
    whenever the parent is included.
    """

    values: tuple | None = None
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        if self.values is not None and self.interval is not None:
            raise DomainError("a condition is either a level set or an interval, not both")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))
        if self.interval is not None:
            lo, hi = (float(b) for b in self.interval)
            if not lo <= hi:
                raise DomainError(f"condition interval [{lo}, {hi}] is empty")
            object.__setattr__(self, "interval", (lo, hi))

    @property
    def always(self) -> bool:
        return self.values is None and self.interval is None

    def holds(self, value: Any) -> bool:
        if value is EXC:
            return False
        if self.values is not None:
            return value in self.values
        if self.interval is not None:
            if value is ACTIVE:
                raise DomainError("interval condition evaluated on an abstract value")
            return self.interval[0] <= value <= self.interval[1]
        return True


@dataclass(frozen=True)
class Affine:
    """``const + slope * parent_value``; slope 0 gives a fixed bound."""

    const: float
    slope: float = 0.0

    def __call__(self, parent_value: Any) -> float:
        if self.slope == 0.0:
            return float(self.const)
        return float(self.const + self.slope * parent_value)

    @property
    def depends_on_parent(self) -> bool:
        return self.slope != 0.0


def _as_affine(bound: Any) -> Affine | None:
    if bound is None or isinstance(bound, Affine):
        return bound
    if _is_number(bound):
        return Affine(float(bound))
    raise DomainError(f"cannot interpret {bound!r} as a bound")


@dataclass(frozen=True)
class Effect:
    """What a firing rule does to its target.

    ``include`` makes the target included, with ``values`` as its admissible
    levels (all levels when omitted). ``exclude`` removes it. ``restrict``
    intersects the admissible set with ``values`` or with the interval
    ``[lower, upper]``, whose bounds may be affine in the parent value.
    """

    kind: str
    values: tuple | None = None
    lower: Affine | None = None
    upper: Affine | None = None

    def __post_init__(self):
        if self.kind not in EFFECT_KINDS:
            raise DomainError(f"unknown effect kind {self.kind!r}")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "lower", _as_affine(self.lower))
        object.__setattr__(self, "upper", _as_affine(self.upper))
        if self.kind == EXCLUDE and (self.values is not None or self.has_bounds):
            raise DomainError("an exclude effect carries no support")
        if self.kind == INCLUDE and self.has_bounds:
            raise DomainError("include effects take a level set; use restrict for bounds")
        if self.kind == RESTRICT:
            if self.values is None and not self.has_bounds:
                raise DomainError("a restrict effect needs levels or bounds")
            if self.values is not None and self.has_bounds:
                raise DomainError("a restrict effect takes levels or bounds, not both")

    @property
    def has_bounds(self) -> bool:
        return self.lower is not None or self.upper is not None

    @property
    def parameterized(self) -> bool:
        return any(b is not None and b.depends_on_parent for b in (self.lower, self.upper))

    @classmethod
    def include(cls, values: Iterable | None = None) -> "Effect":
        return cls(INCLUDE, None if values is None else tuple(values))

    @classmethod
    def exclude(cls) -> "Effect":
        return cls(EXCLUDE)

    @classmethod
    def restrict(cls, *, values: Iterable | None = None, lower: Any = None, upper: Any = None) -> "Effect":
        return cls(RESTRICT, None if values is None else tuple(values), lower, upper)


@dataclass(frozen=True)
class DecreeRule:
    parent: str
    target: str
    effect: Effect
    condition: Condition = field(default_factory=Condition)


@dataclass(frozen=True)
class Endpoint:
    """One side of an incompatibility: a variable, optionally at one level.

    With ``value`` left as ``None`` the endpoint matches whenever the variable
    is included.
    """

    var: str
    value: Any = None

    def matches(self, value: Any) -> bool:
        if value is EXC:
            return False
        return self.value is None or value == self.value


@dataclass(frozen=True)
class IncompatibilityEdge:
    a: Endpoint
    b: Endpoint
    kind: str = "opposed"

    @property
    def endpoints(self) -> tuple[Endpoint, Endpoint]:
        return (self.a, self.b)


@dataclass(frozen=True)
class OrderRelation:
    lesser: str
    greater: str
    strict: bool = True


@dataclass(frozen=True)
class Clause:
    var: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in CLAUSE_OPS:
            raise DomainError(f"unknown clause operator {self.op!r}")
        if self.op == "in":
            object.__setattr__(self, "value", tuple(self.value))

    def holds(self, value: Any) -> bool:
        if value is EXC:
            return False
        op, ref = self.op, self.value
        if op == "==":
            return value == ref
        if op == "!=":
            return value != ref
        if op == "in":
            return value in ref
        if op == "<":
            return value < ref
        if op == "<=":
            return value <= ref
        if op == ">":
            return value > ref
        return value >= ref

    def possible(self, lo: float, hi: float, truth: bool) -> bool:
        """Whether some value in ``[lo, hi]`` gives this clause the truth value ``truth``."""
        op, ref = self.op, self.value
        if op in ("==", "!=", "in"):
            refs = ref if op == "in" else (ref,)
            hit = any(_is_number(r) and lo <= r <= hi for r in refs)
            miss = lo < hi or lo not in refs
            if op == "!=":
                hit, miss = miss, hit
            return hit if truth else miss
        if op in ("<", "<="):
            sat = lo < ref if op == "<" else lo <= ref
            unsat = hi >= ref if op == "<" else hi > ref
        else:
            sat = hi > ref if op == ">" else hi >= ref
            unsat = lo <= ref if op == ">" else lo < ref
        return sat if truth else unsat


@dataclass(frozen=True)
class IntermediateNode:
    """A derived 0/1 node computed from its parents.

    ``mode`` ``"all"`` takes the conjunction of the clauses, ``"any"`` the
    disjunction. A clause on an excluded parent is false.
    """

    name: str
    parents: tuple[str, ...]
    clauses: tuple[Clause, ...]
    mode: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.mode not in ("all", "any"):
            raise DomainError(f"{self.name}: formula mode must be 'all' or 'any'")
        if not self.clauses:
            raise DomainError(f"{self.name}: formula needs at least one clause")

    def evaluate(self, values: Mapping[str, Any]) -> int:
        results = (c.holds(values[c.var]) for c in self.clauses)
        return int(all(results) if self.mode == "all" else any(results))


@dataclass(frozen=True)
class Role:
    """Structural role of a node in the decree graph.

    ``base`` comes from the parent/child structure alone. ``partial`` is set
    when some incoming rule narrows the admissible set without excluding the
    variable; ``conditional`` when some incoming rule includes or excludes it.
    """

    base: str
    partial: bool = False
    conditional: bool = False

    @property
    def label(self) -> str:
        if not self.partial or self.base in ("meta", "neutral"):
            return self.base
        prefix = "meta-" if self.base == "meta-decreed" else ""
        if self.conditional:
            return f"{self.base}/{prefix}partially-decreed"
        return f"{prefix}partially-decreed"

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class Support:
    """Admissible values of a variable given its parents.

    Exactly one of ``values`` (finite domains) and ``interval`` (continuous) is
    meaningful; an empty support means the variable is excluded.
    """

    var: str
    values: tuple | None = None
    interval: tuple[float, float] | None = None

    @property
    def empty(self) -> bool:
        if self.values is not None:
            return not self.values
        return self.interval is None

    def contains(self, value: Any) -> bool:
        if value is EXC or self.empty:
            return False
        if self.values is not None:
            return value in self.values
        return _is_number(value) and self.interval[0] <= value <= self.interval[1]

    def __len__(self) -> int:
        if self.values is not None:
            return len(self.values)
        raise TypeError("an interval support has no length")


class DesignSpaceGraph:
    """Validated, immutable design space. Build it with :func:`build_graph`.

    Points are laid out over :attr:`nodes`: the declared variables in
    declaration order followed by the intermediate nodes.
    """

    def __init__(self, *, name, variables, rules, incompatibilities, orders, intermediates,
                 decls, incoming, parents, children, topo_order, roles):
        self.name = name
        self.variables: tuple[VariableDecl, ...] = variables
        self.rules: tuple[DecreeRule, ...] = rules
        self.incompatibilities: tuple[IncompatibilityEdge, ...] = incompatibilities
        self.orders: tuple[OrderRelation, ...] = orders
        self.intermediates: tuple[IntermediateNode, ...] = intermediates
        self.nodes: tuple[str, ...] = tuple(v.name for v in variables) + tuple(m.name for m in intermediates)
        self.topo_order: tuple[str, ...] = topo_order
        self.roles: Mapping[str, Role] = MappingProxyType(roles)
        self._decls = MappingProxyType(decls)
        self._incoming = MappingProxyType(incoming)
        self._parents = MappingProxyType(parents)
        self._children = MappingProxyType(children)
        self._index = MappingProxyType({n: i for i, n in enumerate(self.nodes)})
        self._mids = MappingProxyType({m.name: m for m in intermediates})
        self._incompat_by_var: dict[str, list[tuple[Endpoint, Endpoint]]] = {n: [] for n in self.nodes}
        for edge in incompatibilities:
            self._incompat_by_var[edge.a.var].append((edge.a, edge.b))
            self._incompat_by_var[edge.b.var].append((edge.b, edge.a))
        self._orders_by_var: dict[str, list[OrderRelation]] = {n: [] for n in self.nodes}
        for rel in orders:
            self._orders_by_var[rel.lesser].append(rel)
            self._orders_by_var[rel.greater].append(rel)
        # Memoized derived data (enumerations, encoders); filled lazily, never mutated after.
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"DesignSpaceGraph({self.name!r}, {len(self.variables)} variables, {len(self.rules)} rules)"

    @property
    def width(self) -> int:
        return len(self.nodes)

    @property
    def design_names(self) -> tuple[str, ...]:
        """Declared variables, i.e. every node except intermediate ones."""
        return tuple(v.name for v in self.variables)

    @property
    def discrete_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.is_discrete)

    @property
    def continuous_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.is_continuous)

    @property
    def config_names(self) -> tuple[str, ...]:
        """Nodes that make up a discrete configuration: discrete variables and intermediate nodes."""
        return self.discrete_names + tuple(m.name for m in self.intermediates)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DanglingReferenceError(f"unknown variable {name!r}") from None

    def decl(self, name: str) -> VariableDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise DanglingReferenceError(f"unknown variable {name!r}") from None

    def is_intermediate(self, name: str) -> bool:
        return name in self._mids

    def intermediate(self, name: str) -> IntermediateNode:
        return self._mids[name]

    def incoming(self, name: str) -> tuple[DecreeRule, ...]:
        self.decl(name)
        return self._incoming[name]

    def parents(self, name: str) -> tuple[str, ...]:
        self.decl(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.decl(name)
        return self._children[name]

    def rules_from(self, name: str) -> tuple[DecreeRule, ...]:
        return tuple(r for r in self.rules if r.parent == name)

    def is_permanent(self, name: str) -> bool:
        """Always included: no incoming rule can exclude it."""
        return not self._incoming[name]

    def incompatibilities_of(self, name: str) -> list[tuple[Endpoint, Endpoint]]:
        return self._incompat_by_var[name]

    def orders_of(self, name: str) -> list[OrderRelation]:
        return self._orders_by_var[name]


def _mid_decl(node: IntermediateNode) -> VariableDecl:
    return VariableDecl(node.name, INTEGER, (0, 1))


def _check_effect(rule: DecreeRule, parent: VariableDecl, target: VariableDecl) -> None:
    effect, cond = rule.effect, rule.condition
    where = f"rule {rule.parent}->{rule.target}"
    if cond.values is not None:
        bad = [v for v in cond.values if not parent.contains(v)]
        if bad:
            raise DomainError(f"{where}: condition levels {bad} not in the domain of {parent.name}")
    if cond.interval is not None and not parent.is_numeric:
        raise DomainError(f"{where}: interval condition needs a numeric parent")
    if parent.is_continuous and not (effect.kind == RESTRICT and target.is_continuous):
        raise DomainError(
            f"{where}: a continuous parent may only restrict a continuous target; "
            "route other logic through an intermediate node"
        )
    if effect.values is not None:
        if target.is_continuous:
            raise DomainError(f"{where}: continuous targets take bounds, not levels")
        bad = [v for v in effect.values if not target.contains(v)]
        if bad:
            raise DomainError(f"{where}: levels {bad} not in the domain of {target.name}")
        if effect.kind == INCLUDE and not effect.values:
            raise DomainError(f"{where}: include effect with an empty level set; use exclude")
    if effect.has_bounds:
        if not target.is_numeric:
            raise DomainError(f"{where}: bound restriction needs a numeric target")
        if effect.parameterized and not parent.is_numeric:
            raise DomainError(f"{where}: bounds depending on the parent need a numeric parent")
        for p in _admissible_parent_samples(parent, cond):
            lo = effect.lower(p) if effect.lower is not None else -math.inf
            hi = effect.upper(p) if effect.upper is not None else math.inf
            if target.is_continuous:
                ok = max(lo, target.lower) <= min(hi, target.upper)
            else:
                ok = any(lo <= v <= hi for v in target.domain)
            if not ok:
                raise DomainError(f"{where}: restriction is empty when {parent.name}={p!r}")


def _admissible_parent_samples(parent: VariableDecl, cond: Condition) -> list:
    """Parent values at which a parameterized bound must be checked (affine => endpoints suffice)."""
    if parent.is_continuous:
        lo, hi = parent.domain
        if cond.interval is not None:
            lo, hi = max(lo, cond.interval[0]), min(hi, cond.interval[1])
        return [lo, hi] if lo <= hi else []
    return [v for v in parent.domain if cond.holds(v)] if parent.is_numeric else [None]


def _find_cycle(successors: Mapping[str, Sequence[str]]) -> tuple[str, ...] | None:
    sorter = graphlib.TopologicalSorter({n: () for n in successors})
    for node, succ in successors.items():
        for s in succ:
            sorter.add(s, node)
    try:
        sorter.prepare()
    except graphlib.CycleError as err:
        return tuple(err.args[1])
    return None


def build_graph(
    decls: Sequence[VariableDecl],
    rules: Sequence[DecreeRule] = (),
    incompat: Sequence[IncompatibilityEdge] = (),
    orders: Sequence[OrderRelation] = (),
    mids: Sequence[IntermediateNode] = (),
    *,
    name: str = "design_space",
) -> DesignSpaceGraph:
    """Validate declarations and return the immutable graph with roles and topo order."""
    decls = tuple(decls)
    rules = tuple(rules)
    incompat = tuple(incompat)
    orders = tuple(orders)
    mids = tuple(mids)

    table: dict[str, VariableDecl] = {}
    for d in decls:
        if not isinstance(d, VariableDecl):
            raise DomainError(f"expected VariableDecl, got {type(d).__name__}")
        if d.name in table:
            raise DomainError(f"duplicate variable name {d.name!r}")
        table[d.name] = d
    for m in mids:
        if m.name in table:
            raise DomainError(f"duplicate node name {m.name!r}")
        table[m.name] = _mid_decl(m)
    order_of_decl = {n: i for i, n in enumerate(table)}

    def resolve(ref: str, what: str) -> VariableDecl:
        if ref not in table:
            raise DanglingReferenceError(f"{what} refers to undeclared variable {ref!r}")
        return table[ref]

    incoming: dict[str, list[DecreeRule]] = {n: [] for n in table}
    successors: dict[str, list[str]] = {n: [] for n in table}
    for rule in rules:
        parent = resolve(rule.parent, "decree rule parent")
        target = resolve(rule.target, "decree rule target")
        if rule.parent == rule.target:
            raise CycleError(f"variable {rule.parent!r} decrees itself", (rule.parent, rule.parent))
        _check_effect(rule, parent, target)
        incoming[rule.target].append(rule)
        if rule.target not in successors[rule.parent]:
            successors[rule.parent].append(rule.target)

    for m in mids:
        clause_vars = {c.var for c in m.clauses}
        for p in m.parents:
            resolve(p, f"intermediate node {m.name!r}")
            if m.name not in successors[p]:
                successors[p].append(m.name)
        missing = clause_vars - set(m.parents)
        if missing:
            raise DanglingReferenceError(
                f"intermediate node {m.name!r} uses {sorted(missing)} which are not listed as its parents"
            )
        for c in m.clauses:
            pdecl = table[c.var]
            if c.op in ("<", "<=", ">", ">=") and not (pdecl.is_numeric and _is_number(c.value)):
                raise DomainError(f"{m.name}: comparison {c.op} needs a numeric parent and threshold")

    cycle = _find_cycle(successors)
    if cycle:
        raise CycleError("decree arcs form a cycle: " + " -> ".join(cycle), cycle)

    for edge in incompat:
        for ep in edge.endpoints:
            d = resolve(ep.var, "incompatibility edge")
            if ep.value is not None and not d.contains(ep.value):
                raise DomainError(f"incompatibility endpoint {ep.var}={ep.value!r} is not a declared level")
        if edge.a.var == edge.b.var and edge.a.value is None and edge.b.value is None:
            raise InfeasibleError(f"variable {edge.a.var!r} is incompatible with itself")

    order_succ: dict[str, list[str]] = {n: [] for n in table}
    for rel in orders:
        for ref in (rel.lesser, rel.greater):
            d = resolve(ref, "order relation")
            if not d.is_numeric:
                raise DomainError(f"order relation on non-quantitative variable {ref!r}")
        if rel.lesser == rel.greater:
            raise CycleError(f"order relation of {rel.lesser!r} with itself", (rel.lesser, rel.lesser))
        order_succ[rel.lesser].append(rel.greater)
    cycle = _find_cycle(order_succ)
    if cycle:
        raise CycleError("order relations form a cycle: " + " < ".join(cycle), cycle)

    # Kahn's algorithm, ties broken by declaration order so the result is stable.
    indegree = {n: 0 for n in table}
    for n, succ in successors.items():
        for s in succ:
            indegree[s] += 1
    heap = [(order_of_decl[n], n) for n, k in indegree.items() if k == 0]
    heapq.heapify(heap)
    topo: list[str] = []
    while heap:
        _, n = heapq.heappop(heap)
        topo.append(n)
        for s in successors[n]:
            indegree[s] -= 1
            if indegree[s] == 0:
                heapq.heappush(heap, (order_of_decl[s], s))

    parents = {n: [] for n in table}
    for n, succ in successors.items():
        for s in succ:
            parents[s].append(n)
    parents = {n: tuple(sorted(ps, key=order_of_decl.get)) for n, ps in parents.items()}
    children = {n: tuple(sorted(s, key=order_of_decl.get)) for n, s in successors.items()}

    roles = {n: _role_from_structure(table[n], incoming[n], parents[n], children[n]) for n in table}

    for edge in incompat:
        a, b = edge.a, edge.b
        if a.value is None and b.value is None and not incoming[a.var] and not incoming[b.var]:
            raise InfeasibleError(
                f"incompatibility between always-included variables {a.var!r} and {b.var!r}"
            )

    return DesignSpaceGraph(
        name=name,
        variables=decls,
        rules=rules,
        incompatibilities=incompat,
        orders=orders,
        intermediates=mids,
        decls=table,
        incoming={n: tuple(rs) for n, rs in incoming.items()},
        parents=parents,
        children=children,
        topo_order=tuple(topo),
        roles=roles,
    )


def _role_from_structure(decl: VariableDecl, rules: Sequence[DecreeRule], parents, children) -> Role:
    if parents and children:
        base = "meta-decreed"
    elif parents:
        base = "decreed"
    elif children:
        base = "meta"
    else:
        base = "neutral"
    partial = False
    conditional = False
    for rule in rules:
        kind = rule.effect.kind
        if kind == RESTRICT:
            partial = True
        elif kind == EXCLUDE:
            conditional = True
        else:
            conditional = True
            values = rule.effect.values
            if values is not None and not decl.is_continuous and set(values) != set(decl.domain):
                partial = True
    return Role(base, partial, conditional)


def derive_role(graph: DesignSpaceGraph, var: str) -> Role:
    """Role of ``var``: meta, meta-decreed, decreed or neutral, plus decree flags."""
    graph.decl(var)
    return graph.roles[var]


def _fires(rule: DecreeRule, values: Mapping[str, Any]) -> bool:
    try:
        pv = values[rule.parent]
    except KeyError:
        raise MissingParentError(
            f"support of {rule.target!r} needs the value of its parent {rule.parent!r}"
        ) from None
    if pv is EXC:
        return False
    if pv is ACTIVE:
        # Abstract continuous parent: only unconditional restrictions are possible.
        return rule.condition.always
    return rule.condition.holds(pv)


def compute_support(graph: DesignSpaceGraph, var: str, values: Mapping[str, Any]) -> Support:
    """Support of ``var`` given values for (at least) its parents.

    Parents may hold :data:`ACTIVE`, in which case bounds that depend on them
    are skipped; this gives the widest admissible set and is what enumeration
    uses for continuous nodes.
    """
    decl = graph.decl(var)
    if graph.is_intermediate(var):
        node = graph.intermediate(var)
        for p in node.parents:
            if p not in values:
                raise MissingParentError(f"intermediate node {var!r} needs the value of {p!r}")
    rules = graph._incoming[var]
    has_include = False
    included = False
    include_all = False
    union: set = set()
    restrictions: list[tuple[DecreeRule, Any]] = []
    for rule in rules:
        kind = rule.effect.kind
        if kind == INCLUDE:
            has_include = True
        if not _fires(rule, values):
            continue
        if kind == EXCLUDE:
            return Support(var, () if decl.is_discrete else None, None)
        if kind == INCLUDE:
            included = True
            if rule.effect.values is None:
                include_all = True
            else:
                union.update(rule.effect.values)
        else:
            restrictions.append((rule, values[rule.parent]))
    if has_include and not included:
        return Support(var, () if decl.is_discrete else None, None)

    if graph.is_intermediate(var):
        node = graph.intermediate(var)
        if any(values[p] is ACTIVE for p in node.parents):
            return Support(var, (0, 1))
        return Support(var, (node.evaluate(values),))

    if decl.is_continuous:
        lo, hi = decl.domain
        for rule, pv in restrictions:
            eff = rule.effect
            if pv is ACTIVE and eff.parameterized:
                continue
            if eff.lower is not None:
                lo = max(lo, eff.lower(pv))
            if eff.upper is not None:
                hi = min(hi, eff.upper(pv))
        return Support(var, None, (lo, hi) if lo <= hi else None)

    admissible = list(decl.domain) if include_all or not has_include else [v for v in decl.domain if v in union]
    for rule, pv in restrictions:
        eff = rule.effect
        if eff.values is not None:
            allowed = set(eff.values)
            admissible = [v for v in admissible if v in allowed]
        else:
            lo = eff.lower(pv) if eff.lower is not None else -math.inf
            hi = eff.upper(pv) if eff.upper is not None else math.inf
            admissible = [v for v in admissible if lo <= v <= hi]
    return Support(var, tuple(admissible))


def support(graph: DesignSpaceGraph, var: str, parent_values: Mapping[str, Any]) -> Support:
    """Admissible set of ``var`` under ``parent_values``; empty means excluded."""
    return compute_support(graph, var, parent_values)
