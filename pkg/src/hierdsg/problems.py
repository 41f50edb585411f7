"""Built-in design spaces with cheap analytic objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Mapping, Sequence

from .configs import enumerate_discrete, hierarchical_names
from .errors import InvalidPointError, UnknownProblemError
from .graph import (
    CATEGORICAL,
    CONTINUOUS,
    EXC,
    INTEGER,
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
    compute_support,
)
from .points import ExtendedPoint, correct, is_valid, make_point


@dataclass(frozen=True)
class SyntheticObjective:
    """Offset table over discrete levels plus a quadratic bowl over active continuous variables.

    ``penalties[var][level]`` is added for every discrete variable (``EXC`` is a
    valid key). Each active continuous variable adds ``curvature * (u - c)**2``
    where ``u`` is its value rescaled to [0, 1] and ``c`` its bowl center, which
    moves with the discrete configuration.
    """

    penalties: Mapping[str, Mapping[Any, float]]
    curvature: float = 1.0
    center_shift: float = 0.37

    def centers(self, graph: DesignSpaceGraph, values: Mapping[str, Any]) -> dict[str, float]:
        code = 0
        for j, name in enumerate(graph.discrete_names):
            v = values.get(name, EXC)
            if v is not EXC:
                code += (graph.decl(name).level_index(v) + 1) * (j + 1)
        out = {}
        for i, name in enumerate(graph.continuous_names):
            frac = (0.618 * (i + 1) + self.center_shift * code) % 1.0
            out[name] = 0.2 + 0.6 * frac
        return out

    def __call__(self, graph: DesignSpaceGraph, values: Mapping[str, Any]) -> float:
        total = 0.0
        for name in graph.discrete_names:
            table = self.penalties.get(name)
            if table:
                total += table.get(values[name], 0.0)
        centers = self.centers(graph, values)
        for name in graph.continuous_names:
            v = values[name]
            if v is EXC:
                continue
            lo, hi = graph.decl(name).domain
            u = (v - lo) / (hi - lo)
            total += self.curvature * (u - centers[name]) ** 2
        return total


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    graph: DesignSpaceGraph
    objective: Callable[[DesignSpaceGraph, Mapping[str, Any]], float]
    n_configurations: int
    n_hierarchical: int
    optimum: ExtendedPoint
    optimum_value: float
    description: str = ""
    aliases: tuple[str, ...] = field(default_factory=tuple)


def evaluate(problem: ProblemSpec, point: ExtendedPoint | Mapping[str, Any]) -> float:
    """Objective value at a valid point; raises InvalidPointError otherwise."""
    graph = problem.graph
    if isinstance(point, Mapping):
        point = make_point(graph, point)
    report = is_valid(graph, point)
    if not report.valid:
        raise InvalidPointError("point is not valid: " + "; ".join(report.violations), report.violations)
    value = float(problem.objective(graph, point.as_dict(graph)))
    if not math.isfinite(value):
        raise InvalidPointError("objective is not finite at this point")
    return value


def _optimum_in(graph: DesignSpaceGraph, objective: SyntheticObjective, config: Mapping[str, Any]) -> ExtendedPoint:
    """Best point inside one discrete configuration: bowl centers clipped to their supports."""
    values = dict(config)
    centers = objective.centers(graph, values)
    raw = {}
    for name in graph.topo_order:
        decl = graph.decl(name)
        if decl.is_continuous:
            sup = compute_support(graph, name, values)
            if sup.empty:
                values[name] = EXC
                continue
            lo, hi = decl.domain
            target = lo + centers[name] * (hi - lo)
            values[name] = min(max(target, sup.interval[0]), sup.interval[1])
            raw[name] = values[name]
        elif graph.is_intermediate(name):
            sup = compute_support(graph, name, values)
            values[name] = EXC if sup.empty else sup.values[0]
        else:
            raw[name] = values[name]
    point, _ = correct(graph, raw)
    return point


def _make_spec(name, graph, objective, best_config, description, aliases=()) -> ProblemSpec:
    configs = enumerate_discrete(graph)
    hierarchical = enumerate_discrete(graph, project=hierarchical_names(graph))
    optimum = _optimum_in(graph, objective, best_config)
    value = float(objective(graph, optimum.as_dict(graph)))
    return ProblemSpec(name, graph, objective, len(configs), len(hierarchical), optimum, value, description, tuple(aliases))


def _cont(name, lo, hi):
    return VariableDecl(name, CONTINUOUS, (lo, hi))


def _int(name, levels):
    return VariableDecl(name, INTEGER, tuple(levels))


def _cat(name, levels):
    return VariableDecl(name, CATEGORICAL, tuple(levels))


def _when(parent, target, levels, values=None):
    return DecreeRule(parent, target, Effect.include(values), Condition(values=tuple(levels)))


def _source_to_consumer() -> ProblemSpec:
    decls = [_int("w_s", (1, 2)), _int("w_c", (1, 2)), _int("c1", (1, 2)), _int("c2", (1, 2))]
    rules = [
        _when("w_c", "c2", (2,)),
        DecreeRule("w_s", "c1", Effect.restrict(lower=1, upper=Affine(0.0, 1.0))),
        DecreeRule("w_s", "c2", Effect.restrict(lower=1, upper=Affine(0.0, 1.0))),
    ]
    graph = build_graph(decls, rules, name="source_to_consumer")
    objective = SyntheticObjective(
        {
            "w_s": {1: 1.0, 2: 0.0},
            "w_c": {1: 0.5, 2: 0.0},
            "c1": {1: 0.3, 2: 0.0},
            "c2": {1: 0.0, 2: 0.4, EXC: 0.8},
        }
    )
    return _make_spec(
        "source_to_consumer",
        graph,
        objective,
        {"w_s": 2, "w_c": 2, "c1": 2, "c2": 1},
        "Energy sources assigned to consumers; the second consumer exists only when two are requested "
        "and each assignment is bounded by the number of sources.",
    )


def _wing_length() -> ProblemSpec:
    decls = [_int("m", (0, 1, 2)), _int("p1", (1, 2)), _int("p2", (1, 2)), _cont("l", 1.0, 4.0)]
    rules = [
        _when("m", "p1", (1, 2)),
        _when("m", "p2", (2,)),
        DecreeRule("m", "l", Effect.restrict(lower=Affine(1.0, 1.0))),
    ]
    graph = build_graph(decls, rules, name="wing_length")
    objective = SyntheticObjective(
        {"m": {0: 0.6, 1: 0.0, 2: 0.3}, "p1": {1: 0.2, 2: 0.0}, "p2": {1: 0.0, 2: 0.1}}
    )
    return _make_spec(
        "wing_length",
        graph,
        objective,
        {"m": 1, "p1": 2, "p2": EXC},
        "Motors per wing decide how many propeller counts exist and bound the wing length from below.",
    )


def _motors_propellers() -> ProblemSpec:
    decls = [
        _int("m", (0, 1, 2)),
        _int("p1", (1, 2)),
        _int("p2", (1, 2)),
        _cont("r11", 0.2, 1.5),
        _cont("r12", 0.2, 1.5),
        _cont("r21", 0.2, 1.5),
        _cont("r22", 0.2, 1.5),
    ]
    rules = [
        _when("m", "p1", (1, 2)),
        _when("m", "p2", (2,)),
        _when("p1", "r11", (1, 2)),
        _when("p1", "r12", (2,)),
        _when("p2", "r21", (1, 2)),
        _when("p2", "r22", (2,)),
    ]
    graph = build_graph(decls, rules, name="motors_propellers")
    objective = SyntheticObjective(
        {"m": {0: 0.8, 1: 0.3, 2: 0.0}, "p1": {1: 0.25, 2: 0.0}, "p2": {1: 0.0, 2: 0.15}}
    )
    return _make_spec(
        "motors_propellers",
        graph,
        objective,
        {"m": 2, "p1": 2, "p2": 1},
        "Extra motors per wing, propellers per motor and one radius per propeller.",
    )


def _hybrid_energy() -> ProblemSpec:
    decls = [
        _cat("energy", ("Fuel", "Electric", "Hybrid")),
        _cat("reserve_size", ("Big", "Small")),
        _cat("battery_type", ("Safe", "Optimal")),
        _cont("reserve_small", 100.0, 300.0),
        _cont("reserve_big", 300.0, 600.0),
        _cont("safe_capacity", 50.0, 150.0),
        _cont("full_capacity", 150.0, 300.0),
    ]
    rules = [
        _when("energy", "reserve_size", ("Fuel", "Hybrid")),
        _when("energy", "battery_type", ("Electric", "Hybrid")),
        _when("reserve_size", "reserve_small", ("Small",)),
        _when("reserve_size", "reserve_big", ("Big",)),
        _when("battery_type", "safe_capacity", ("Safe",)),
        _when("battery_type", "full_capacity", ("Optimal",)),
    ]
    incompat = [IncompatibilityEdge(Endpoint("reserve_big"), Endpoint("full_capacity"))]
    graph = build_graph(decls, rules, incompat, name="hybrid_energy")
    objective = SyntheticObjective(
        {
            "energy": {"Fuel": 0.7, "Electric": 0.4, "Hybrid": 0.0},
            "reserve_size": {"Big": 0.2, "Small": 0.0},
            "battery_type": {"Safe": 0.0, "Optimal": 0.3},
        }
    )
    return _make_spec(
        "hybrid_energy",
        graph,
        objective,
        {"energy": "Hybrid", "reserve_size": "Small", "battery_type": "Safe"},
        "Energy source choice with reserve and battery sizing; a big reserve cannot be combined with "
        "the full-capacity battery.",
    )


@dataclass(frozen=True)
class _PressureObjective:
    target: tuple[float, float, float] = (4.0, 3.0, 2.0)

    def __call__(self, graph: DesignSpaceGraph, values: Mapping[str, Any]) -> float:
        names = ("P_max", "P_input", "P_min")
        return float(sum((values[n] - t) ** 2 for n, t in zip(names, self.target)))


def _pressure_order() -> ProblemSpec:
    decls = [_cont("P_max", 1.5, 5.0), _cont("P_input", 1.25, 5.0), _cont("P_min", 1.0, 5.0)]
    rules = [
        DecreeRule("P_max", "P_input", Effect.restrict(upper=Affine(0.0, 1.0))),
        DecreeRule("P_input", "P_min", Effect.restrict(upper=Affine(0.0, 1.0))),
    ]
    orders = [OrderRelation("P_input", "P_max"), OrderRelation("P_min", "P_input")]
    graph = build_graph(decls, rules, orders=orders, name="pressure_order")
    optimum = make_point(graph, {"P_max": 4.0, "P_input": 3.0, "P_min": 2.0})
    return ProblemSpec(
        "pressure_order",
        graph,
        _PressureObjective(),
        len(enumerate_discrete(graph)),
        len(enumerate_discrete(graph, project=())),
        optimum,
        0.0,
        "Tank pressures that must satisfy P_min < P_input < P_max.",
    )


def _backup_battery() -> ProblemSpec:
    decls = [
        _cat("energy", ("Fuel", "Electric", "Hybrid")),
        _cont("reserve", 100.0, 600.0),
        _cont("battery", 50.0, 300.0),
    ]
    low = IntermediateNode("low_reserve", ("reserve",), (Clause("reserve", "<", 300.0),))
    rules = [
        _when("energy", "reserve", ("Fuel", "Hybrid")),
        _when("energy", "low_reserve", ("Hybrid",)),
        _when("energy", "battery", ("Electric",)),
        _when("low_reserve", "battery", (1,)),
    ]
    graph = build_graph(decls, rules, mids=[low], name="backup_battery")
    objective = SyntheticObjective({"energy": {"Fuel": 0.5, "Electric": 0.35, "Hybrid": 0.0}})
    return _make_spec(
        "backup_battery",
        graph,
        objective,
        {"energy": "Hybrid"},
        "A backup battery is sized for electric aircraft, and for hybrids whose fuel reserve is "
        "below 300 L (an intermediate 0/1 node carries the 'and').",
    )


DRAGON_CONTINUOUS = (
    ("fan_pressure_ratio", 1.05, 1.3),
    ("wing_aspect_ratio", 8.0, 12.0),
    ("wing_sweep", 15.0, 40.0),
    ("wing_taper_ratio", 0.2, 0.5),
    ("ht_aspect_ratio", 3.0, 6.0),
    ("ht_sweep", 20.0, 40.0),
    ("ht_taper_ratio", 0.3, 0.5),
    ("tofl_sizing", 1800.0, 2500.0),
    ("climb_vertical_speed", 300.0, 800.0),
    ("climb_slope", 0.075, 0.15),
)

#: Admissible motor counts per number of cores: multiples of 4, 8 and 12.
DRAGON_MOTORS = {
    2: tuple(range(8, 41, 4)),
    4: tuple(range(8, 41, 8)),
    6: tuple(range(12, 41, 12)),
}


def _dragon_lite() -> ProblemSpec:
    decls = [_cont(n, lo, hi) for n, lo, hi in DRAGON_CONTINUOUS]
    decls += [_cat("layout", (1, 2)), _int("cores", (2, 4, 6)), _int("motors", tuple(range(8, 41, 4)))]
    rules = [_when("cores", "motors", (c,), motors) for c, motors in DRAGON_MOTORS.items()]
    graph = build_graph(decls, rules, name="dragon_lite")
    motor_penalty = {m: 0.02 * (m - 8) / 4 for m in range(8, 41, 4)}
    objective = SyntheticObjective(
        {"layout": {1: 0.25, 2: 0.0}, "cores": {2: 0.3, 4: 0.0, 6: 0.45}, "motors": motor_penalty},
        curvature=0.5,
    )
    return _make_spec(
        "dragon_lite",
        graph,
        objective,
        {"layout": 2, "cores": 4, "motors": 8},
        "Distributed-propulsion aircraft: ten neutral continuous design variables, the turboshaft "
        "layout, and a number of cores that decides which motor counts are admissible.",
    )


def _dragon_categorical() -> ProblemSpec:
    pairs = [(c, m) for c, motors in DRAGON_MOTORS.items() for m in motors]
    decls = [_cont(n, lo, hi) for n, lo, hi in DRAGON_CONTINUOUS]
    decls += [_cat("layout", (1, 2)), _cat("architecture", tuple(range(1, len(pairs) + 1)))]
    graph = build_graph(decls, name="dragon_categorical")
    arch_penalty = {}
    for k, (c, m) in enumerate(pairs, start=1):
        arch_penalty[k] = {2: 0.3, 4: 0.0, 6: 0.45}[c] + 0.02 * (m - 8) / 4
    objective = SyntheticObjective({"layout": {1: 0.25, 2: 0.0}, "architecture": arch_penalty}, curvature=0.5)
    best = 1 + pairs.index((4, 8))
    return _make_spec(
        "dragon_categorical",
        graph,
        objective,
        {"layout": 2, "architecture": best},
        "The same aircraft with the propulsive architecture flattened into one 17-level categorical variable.",
    )


MLP_UNITS = (25, 30, 35, 40, 45)


def _mlp_declarations() -> list[VariableDecl]:
    return [
        _cont("learning_rate", 0.0, 1.0),
        _cat("activation", ("ReLU", "Sigmoid", "Tanh")),
        _cat("optimizer", ("ASGD", "Adam")),
        _int("n_layers", (1, 2, 3)),
        _int("units_1", MLP_UNITS),
        _int("units_2", MLP_UNITS),
        _int("units_3", MLP_UNITS),
        _cont("decay", 0.0, 1.0),
        _cont("power_update", 0.0, 1.0),
        _cont("average_start", 1e3, 1e8),
        _cont("run_average_1", 0.0, 1.0),
        _cont("run_average_2", 0.0, 1.0),
        _cont("num_stability", 0.0, 1.0),
    ]


_MLP_OPTIMIZER_VARS = {
    "ASGD": ("decay", "power_update", "average_start"),
    "Adam": ("run_average_1", "run_average_2", "num_stability"),
}


def _mlp_objective() -> SyntheticObjective:
    units = {u: 0.03 * abs(u - 35) / 5 for u in MLP_UNITS}
    return SyntheticObjective(
        {
            "activation": {"ReLU": 0.0, "Sigmoid": 0.35, "Tanh": 0.15},
            "optimizer": {"ASGD": 0.25, "Adam": 0.0},
            "n_layers": {1: 0.3, 2: 0.0, 3: 0.1},
            "units_1": units,
            "units_2": {**units, EXC: 0.05},
            "units_3": {**units, EXC: 0.0},
        }
    )


def _mlp_flat() -> ProblemSpec:
    rules = [DecreeRule("optimizer", "n_layers", Effect.include(), Condition(values=("ASGD", "Adam")))]
    rules += [_when("n_layers", f"units_{i}", tuple(n for n in (1, 2, 3) if n >= i)) for i in (1, 2, 3)]
    for opt, names in _MLP_OPTIMIZER_VARS.items():
        rules += [_when("optimizer", n, (opt,)) for n in names]
    graph = build_graph(_mlp_declarations(), rules, name="mlp")
    return _make_spec(
        "mlp",
        graph,
        _mlp_objective(),
        {"activation": "ReLU", "optimizer": "Adam", "n_layers": 2, "units_1": 35, "units_2": 35, "units_3": EXC},
        "Multilayer-perceptron hyperparameters: the optimizer decides its own continuous settings and "
        "the number of layers decides how many unit counts exist.",
        aliases=("mlp_flat",),
    )


def mlp_conditional(
    layer_levels: Mapping[str, Sequence[int]],
    unit_levels: Mapping[tuple[str, int], Sequence[Sequence[int]]],
    *,
    name: str = "mlp_conditional",
) -> DesignSpaceGraph:
    """MLP space where the admissible layer counts depend on the optimizer and the
    admissible unit counts on the (optimizer, layers) pair.

    ``layer_levels[opt]`` lists the layer counts allowed for ``opt``.
    ``unit_levels[(opt, n)]`` gives, for each of the ``n`` layers, the allowed
    unit counts. Every pair becomes an intermediate 0/1 node so the conjunction
    stays expressible with single-parent rules.
    """
    decls = _mlp_declarations()
    rules = [
        DecreeRule("optimizer", "n_layers", Effect.include(tuple(levels)), Condition(values=(opt,)))
        for opt, levels in layer_levels.items()
    ]
    for opt, names in _MLP_OPTIMIZER_VARS.items():
        rules += [_when("optimizer", n, (opt,)) for n in names]
    mids = []
    for (opt, n_layers), per_layer in unit_levels.items():
        if n_layers not in layer_levels.get(opt, ()):
            raise ValueError(f"unit levels given for ({opt}, {n_layers}) which is not an allowed layer count")
        if len(per_layer) != n_layers:
            raise ValueError(f"({opt}, {n_layers}) needs {n_layers} unit level lists, got {len(per_layer)}")
        node = f"pair_{opt}_{n_layers}"
        mids.append(
            IntermediateNode(
                node,
                ("optimizer", "n_layers"),
                (Clause("optimizer", "==", opt), Clause("n_layers", "==", n_layers)),
            )
        )
        for i, levels in enumerate(per_layer, start=1):
            rules.append(DecreeRule(node, f"units_{i}", Effect.include(tuple(levels)), Condition(values=(1,))))
    return build_graph(decls, rules, mids=mids, name=name)


_BUILDERS: dict[str, Callable[[], ProblemSpec]] = {
    "source_to_consumer": _source_to_consumer,
    "wing_length": _wing_length,
    "motors_propellers": _motors_propellers,
    "hybrid_energy": _hybrid_energy,
    "pressure_order": _pressure_order,
    "backup_battery": _backup_battery,
    "dragon_lite": _dragon_lite,
    "dragon_categorical": _dragon_categorical,
    "mlp": _mlp_flat,
}

_ALIASES = {"mlp_flat": "mlp"}


def list_problems() -> tuple[str, ...]:
    return tuple(_BUILDERS)


@lru_cache(maxsize=None)
def _build(name: str) -> ProblemSpec:
    return _BUILDERS[name]()


def get_problem(name: str) -> ProblemSpec:
    """Registered problem by name (``mlp_flat`` is an alias of ``mlp``)."""
    key = _ALIASES.get(name, name)
    if key not in _BUILDERS:
        raise UnknownProblemError(f"unknown problem {name!r}; known: {', '.join(_BUILDERS)}")
    return _build(key)
