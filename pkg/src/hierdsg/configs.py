"""Discrete configurations: exhaustive enumeration, imputation statistics, sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import BudgetError, InfeasibleError
from .graph import ACTIVE, EXC, DesignSpaceGraph, compute_support
from .points import (
    ExtendedPoint,
    _conflicts,
    _continuous_window,
    _order_window,
    abstract_candidates,
    correct,
)

DEFAULT_CAP = 10**7


def enumerate_discrete(
    graph: DesignSpaceGraph,
    cap: int = DEFAULT_CAP,
    project: Sequence[str] | None = None,
) -> list[tuple]:
    """All valid discrete configurations, in lexicographic order over the topo order.

    Each configuration is a tuple over ``graph.nodes``: discrete variables and
    intermediate nodes hold a level or EXC, continuous variables hold ACTIVE or
    EXC. With ``project`` the configurations are restricted to those names and
    de-duplicated, keeping first occurrences.
    """
    key = ("configs", cap)
    configs = graph._cache.get(key)
    if configs is None:
        configs = _enumerate(graph, cap)
        graph._cache[key] = configs
    if project is None:
        return list(configs)
    idx = [graph.index(n) for n in project]
    seen: dict[tuple, None] = {}
    for c in configs:
        seen.setdefault(tuple(c[i] for i in idx), None)
    return list(seen)


def hierarchical_names(graph: DesignSpaceGraph) -> tuple[str, ...]:
    """Discrete variables that take part in the decree structure (non-neutral roles)."""
    return tuple(n for n in graph.discrete_names if graph.roles[n].base != "neutral")


def _enumerate(graph: DesignSpaceGraph, cap: int) -> list[tuple]:
    order = graph.topo_order
    pos = [graph.index(n) for n in order]
    width = graph.width
    out: list[tuple] = []
    assigned: dict[str, Any] = {}
    intervals: dict[str, tuple] = {}

    def visit(depth: int) -> None:
        if depth == len(order):
            if len(out) >= cap:
                raise BudgetError(f"more than {cap} discrete configurations")
            row = [None] * width
            for name, p in zip(order, pos):
                row[p] = assigned[name]
            out.append(tuple(row))
            return
        name = order[depth]
        for value in abstract_candidates(graph, name, assigned, intervals):
            assigned[name] = value
            visit(depth + 1)
        assigned.pop(name, None)

    visit(0)
    return out


@dataclass(frozen=True)
class ImputationStats:
    """How much of the declared discrete space is valid.

    Ratios are exact fractions; ``float()`` them for display.
    """

    n_valid: int
    n_declared: int
    imp_ratio: Fraction
    n_discrete: int
    n_dim_cont: int
    n_dim_cont_mean: Fraction
    cont_imp_ratio: Fraction

    def as_row(self) -> dict[str, Any]:
        return {
            "n_valid": self.n_valid,
            "n_declared": self.n_declared,
            "imp_ratio": float(self.imp_ratio),
            "n_discrete": self.n_discrete,
            "n_dim_cont": self.n_dim_cont,
            "n_dim_cont_mean": float(self.n_dim_cont_mean),
            "cont_imp_ratio": float(self.cont_imp_ratio),
        }


def stats(graph: DesignSpaceGraph, cap: int = DEFAULT_CAP) -> ImputationStats:
    """Imputation statistics over the declared discrete variables.

    A valid discrete assignment is counted once even when an intermediate node
    splits it into several configurations; its active-continuous count is then
    the mean over those configurations.
    """
    configs = enumerate_discrete(graph, cap)
    discrete = graph.discrete_names
    continuous = graph.continuous_names
    d_idx = [graph.index(n) for n in discrete]
    c_idx = [graph.index(n) for n in continuous]
    groups: dict[tuple, list[int]] = {}
    for c in configs:
        groups.setdefault(tuple(c[i] for i in d_idx), []).append(sum(c[i] is ACTIVE for i in c_idx))
    n_valid = len(groups)
    n_declared = math.prod(len(graph.decl(n).levels) for n in discrete)
    n_dim_cont = len(continuous)
    if n_valid:
        mean_cont = sum(Fraction(sum(v), len(v)) for v in groups.values()) / n_valid
        imp_ratio = Fraction(n_declared, n_valid)
    else:
        mean_cont = Fraction(0)
        imp_ratio = Fraction(0)
    cont_ratio = Fraction(n_dim_cont) / mean_cont if mean_cont else Fraction(1)
    return ImputationStats(
        n_valid=n_valid,
        n_declared=n_declared,
        imp_ratio=imp_ratio,
        n_discrete=len(discrete),
        n_dim_cont=n_dim_cont,
        n_dim_cont_mean=mean_cont,
        cont_imp_ratio=cont_ratio,
    )


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based generator; child streams come from ``SeedSequence.spawn``."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


_DRAW_ATTEMPTS = 50


def _draw(graph: DesignSpaceGraph, config: tuple, rng: np.random.Generator) -> ExtendedPoint:
    """A random valid point inside ``config``; continuous values uniform on their supports."""
    target = dict(zip(graph.nodes, config))
    for _ in range(_DRAW_ATTEMPTS):
        assigned: dict[str, Any] = {}
        ok = True
        for name in graph.topo_order:
            decl = graph.decl(name)
            wanted = target[name]
            if decl.is_continuous and wanted is ACTIVE:
                sup = compute_support(graph, name, assigned)
                bounds = None if sup.empty else _continuous_window(
                    decl, *sup.interval, _order_window(graph, name, assigned)
                )
                if bounds is None:
                    ok = False
                    break
                value = float(rng.uniform(bounds[0], bounds[1]))
                if _conflicts(graph, name, value, assigned) is not None:
                    ok = False
                    break
                assigned[name] = value
            elif graph.is_intermediate(name) and wanted is not EXC:
                value = graph.intermediate(name).evaluate(assigned)
                if value != wanted:
                    ok = False
                    break
                assigned[name] = value
            else:
                assigned[name] = wanted
        if ok:
            return ExtendedPoint(tuple(assigned[n] for n in graph.nodes))
    # The configuration is too narrow for rejection; fall back to the nearest valid point.
    raw = {n: v for n, v in assigned.items() if v is not ACTIVE}
    return correct(graph, raw)[0]


def sample_valid(graph: DesignSpaceGraph, n: int, seed: int | np.random.SeedSequence = 0) -> list[ExtendedPoint]:
    """``n`` random valid points, spread over the discrete configurations.

    One point is drawn in every configuration, then ``n`` of them are kept
    without replacement. When ``n`` exceeds the number of configurations every
    configuration is kept and the remainder is filled by configurations drawn
    with replacement, each with fresh continuous values.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return []
    configs = enumerate_discrete(graph)
    if not configs:
        raise InfeasibleError("design space has no valid configuration")
    rng = make_rng(seed)
    pool = [_draw(graph, c, rng) for c in configs]
    if n <= len(pool):
        picks = rng.choice(len(pool), size=n, replace=False)
        return [pool[int(i)] for i in picks]
    extra = rng.integers(0, len(configs), size=n - len(pool))
    points = pool + [_draw(graph, configs[int(i)], rng) for i in extra]
    return [points[int(i)] for i in rng.permutation(len(points))]
