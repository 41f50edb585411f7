"""Distances between extended points.

Each declared variable gets a base distance: the algebraic distance for
continuous and integer variables (after rescaling the declared domain to
[0, 1]), the rank difference divided by ``levels - 1`` for ordinal ones and
the 0/1 indicator for categorical ones. A variable excluded in exactly one of
the two points costs ``delta[i]``; excluded in both, nothing. The per-variable
values are combined with a p-norm. Intermediate nodes are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import _core
from .errors import DomainError, HyperparamError, NonFiniteError, UnboundedError, WidthError
from .graph import CATEGORICAL, EXC, ORDINAL, DesignSpaceGraph, VariableDecl
from .points import ExtendedPoint

ALGEBRAIC = "algebraic"
INDICATOR = "indicator"
RANK = "rank"
ABSOLUTE = "absolute"

_KIND_CODES = {ALGEBRAIC: _core.ALG, INDICATOR: _core.INDICATOR, RANK: _core.ABSDIFF, ABSOLUTE: _core.ABSDIFF}


def alg_distance(x: float, x2: float) -> float:
    """``|x - x2| / (sqrt(x**2 + 1) * sqrt(x2**2 + 1))``, which lies in [0, 1]."""
    if not (math.isfinite(x) and math.isfinite(x2)):
        raise NonFiniteError(f"algebraic distance needs finite inputs, got ({x}, {x2})")
    x, x2 = float(x), float(x2)
    return abs(x - x2) / (math.sqrt(x * x + 1.0) * math.sqrt(x2 * x2 + 1.0))


def base_metric(decl: VariableDecl) -> str:
    if decl.vtype == CATEGORICAL:
        return INDICATOR
    if decl.vtype == ORDINAL:
        return RANK
    return ALGEBRAIC


def code_value(decl: VariableDecl, value: Any) -> float:
    """Coordinate used by the base distance: rescaled value, rank or level index."""
    if not decl.contains(value):
        raise DomainError(f"{decl.name}: {value!r} is outside the declared domain")
    if decl.is_continuous:
        lo, hi = decl.domain
        return (float(value) - lo) / (hi - lo)
    levels = decl.domain
    if decl.vtype == CATEGORICAL:
        return float(decl.level_index(value))
    if decl.vtype == ORDINAL:
        return decl.level_index(value) / (len(levels) - 1) if len(levels) > 1 else 0.0
    lo, hi = levels[0], levels[-1]
    return (value - lo) / (hi - lo) if hi > lo else 0.0


def _grid_supremum(metric: str, n: int = 2001) -> float:
    """Largest base distance over a grid of [0, 1] (the rescaled domain)."""
    grid = np.linspace(0.0, 1.0, n)
    if metric == ALGEBRAIC:
        a, b = grid[:, None], grid[None, :]
        return float(np.max(np.abs(a - b) / (np.sqrt(a * a + 1.0) * np.sqrt(b * b + 1.0))))
    return 1.0


def default_delta(graph: DesignSpaceGraph, var: str, metric: str | None = None) -> float:
    """Exclusion constant for ``var``: half of the bound 1 on its base distance.

    Every base distance lies in [0, 1] on the rescaled domain (the algebraic
    distance is bounded by 1 on the whole real line), so 0.5 keeps the triangle
    inequality when one side is excluded. The in-domain supremum is checked on a
    grid. Variables with a single admissible value never differ, giving 0.
    """
    decl = graph.decl(var)
    metric = metric or base_metric(decl)
    if metric not in _KIND_CODES:
        raise ValueError(f"unknown base metric {metric!r}")
    if decl.is_continuous:
        if not all(math.isfinite(b) for b in decl.domain):
            raise UnboundedError(f"{var}: unbounded domain has no finite distance supremum")
    elif len(decl.domain) < 2:
        return 0.0
    sup = _grid_supremum(metric)
    if sup > 1.0:
        raise UnboundedError(f"{var}: base distance exceeds 1 on the rescaled domain")
    return 0.5


@dataclass(frozen=True)
class DistanceParams:
    """Per-variable scales ``theta``, exclusion constants ``delta`` and the exponent ``p``.

    Both vectors run over :attr:`DesignSpaceGraph.design_names`.
    """

    theta: tuple[float, ...]
    delta: tuple[float, ...]
    p: float = 2.0

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        delta = tuple(float(d) for d in self.delta)
        if len(theta) != len(delta):
            raise HyperparamError("theta and delta lengths differ")
        if any(not (t > 0 and math.isfinite(t)) for t in theta):
            raise HyperparamError("theta entries must be positive and finite")
        if any(not (d >= 0 and math.isfinite(d)) for d in delta):
            raise HyperparamError("delta entries must be non-negative and finite")
        if not self.p >= 1:
            raise HyperparamError(f"p must be at least 1, got {self.p}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def default(
        cls,
        graph: DesignSpaceGraph,
        p: float = 2.0,
        theta: Sequence[float] | None = None,
        mode: str = "metric",
    ) -> "DistanceParams":
        """``mode="metric"`` charges ``theta * default_delta`` for a one-sided
        exclusion; ``mode="unit"`` charges ``theta`` (a unit distance)."""
        names = graph.design_names
        theta = tuple(theta) if theta is not None else (1.0,) * len(names)
        if len(theta) != len(names):
            raise HyperparamError(f"expected {len(names)} theta values, got {len(theta)}")
        if mode == "metric":
            delta = tuple(t * default_delta(graph, n) for t, n in zip(theta, names))
        elif mode == "unit":
            delta = tuple(float(t) for t in theta)
        else:
            raise ValueError(f"unknown delta mode {mode!r}")
        return cls(theta, delta, p)


def _coding(graph: DesignSpaceGraph):
    cached = graph._cache.get("distance_coding")
    if cached is None:
        decls = [graph.decl(n) for n in graph.design_names]
        kinds = np.array([_KIND_CODES[base_metric(d)] for d in decls], dtype=np.intc)
        cached = (decls, kinds)
        graph._cache["distance_coding"] = cached
    return cached


def encode_points(graph: DesignSpaceGraph, points: Sequence[ExtendedPoint]) -> np.ndarray:
    """Matrix of base-distance coordinates over the declared variables; NaN marks EXC."""
    decls, _ = _coding(graph)
    n_vars = len(decls)
    out = np.empty((len(points), n_vars))
    for r, point in enumerate(points):
        if len(point.values) != graph.width:
            raise WidthError(f"point has {len(point.values)} entries, design space has {graph.width}")
        for c, decl in enumerate(decls):
            v = point.values[c]
            out[r, c] = np.nan if v is EXC else code_value(decl, v)
    return out


def per_var_distance(graph: DesignSpaceGraph, v: Any, v2: Any, i: int, params: DistanceParams) -> float:
    """Distance contributed by variable ``i`` (index into ``design_names``)."""
    decls, _ = _coding(graph)
    decl = decls[i]
    if v is EXC and v2 is EXC:
        return 0.0
    if v is EXC or v2 is EXC:
        present = v2 if v is EXC else v
        code_value(decl, present)
        return params.delta[i]
    a, b = code_value(decl, v), code_value(decl, v2)
    metric = base_metric(decl)
    theta = params.theta[i]
    if metric == ALGEBRAIC:
        return theta * (abs(a - b) / (math.sqrt(a * a + 1.0) * math.sqrt(b * b + 1.0)))
    if metric == INDICATOR:
        return 0.0 if a == b else theta
    return theta * abs(a - b)


def _check_params(graph: DesignSpaceGraph, params: DistanceParams) -> None:
    if len(params.theta) != len(graph.design_names):
        raise WidthError(f"params cover {len(params.theta)} variables, design space has {len(graph.design_names)}")


def variable_distances(graph, A: np.ndarray, B: np.ndarray | None, params: DistanceParams) -> np.ndarray:
    """Per-variable distance tensor ``(n_vars, len(A), len(B))`` from encoded points."""
    _check_params(graph, params)
    _, kinds = _coding(graph)
    symmetric = B is None
    return _core.var_distances(A, A if symmetric else B, kinds, params.theta, params.delta, symmetric)


def hier_distance(graph: DesignSpaceGraph, X: ExtendedPoint, X2: ExtendedPoint, params: DistanceParams) -> float:
    """p-norm of the per-variable distances between two points."""
    A = encode_points(graph, [X])
    B = encode_points(graph, [X2])
    D = variable_distances(graph, A, B, params)
    return float(_core.minkowski(D, params.p)[0, 0])


def pairwise_matrix(graph: DesignSpaceGraph, points: Sequence[ExtendedPoint], params: DistanceParams) -> np.ndarray:
    """Symmetric matrix of :func:`hier_distance` values; each pair is computed once."""
    if not len(points):
        raise ValueError("need at least one point")
    A = encode_points(graph, points)
    D = variable_distances(graph, A, None, params)
    return _core.minkowski(D, params.p)
