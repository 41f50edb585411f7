"""Bayesian optimization by sample, correct and score.

Candidates for each iteration come from :func:`sample_valid` plus random
perturbations of the incumbent pushed through :func:`correct`, so every
proposal is valid by construction. The acquisition is maximized over that
finite pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np
import scipy.special

from .configs import make_rng, sample_valid
from .errors import DegenerateError, HyperparamError, SingularError
from .graph import EXC, DesignSpaceGraph
from .gp import GpModel, SearchConfig, Dataset, fit
from .kernels import HIER, KINDS
from .points import ExtendedPoint, correct
from .problems import ProblemSpec, evaluate

EI = "EI"
WB2S = "WB2S"
ACQUISITIONS = (EI, WB2S)

#: Multiplier in the WB2S scale ``s = WB2S_SCALE * |mu(x*)| / EI(x*)``.
WB2S_SCALE = 100.0

# Stream tags under the run seed.
_DOE, _POOL, _RANDOM = 0, 1, 2

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BoConfig:
    """Loop settings. ``search`` drives every refit; the previous scales seed the first start."""

    doe: int = 10
    budget: int = 50
    acquisition: str = EI
    pool_size: int = 512
    n_perturb: int = 64
    perturb_scale: float = 0.1
    seed: int = 0
    kernel: str = HIER
    search: SearchConfig = SearchConfig()

    def __post_init__(self):
        if self.doe < 1 or self.budget < 1:
            raise ValueError("doe size and budget must be positive")
        if self.pool_size < 1 or self.n_perturb < 0:
            raise ValueError("pool size must be at least 1 and perturbation count non-negative")
        if self.acquisition not in ACQUISITIONS:
            raise ValueError(f"unknown acquisition {self.acquisition!r}; expected one of {ACQUISITIONS}")
        if self.kernel not in KINDS:
            raise HyperparamError(f"unknown kernel kind {self.kernel!r}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int  # negative during the DoE: -doe .. -1
    point: ExtendedPoint
    value: float
    incumbent: float
    fallback: bool = False  # proposal drawn at random because the model could not be fitted


@dataclass(frozen=True)
class BoTrace:
    problem: str
    method: str
    seed: int
    doe: tuple[TraceRecord, ...]
    iterations: tuple[TraceRecord, ...]

    @property
    def records(self) -> tuple[TraceRecord, ...]:
        return self.doe + self.iterations

    def __len__(self) -> int:
        return len(self.doe) + len(self.iterations)

    @property
    def final_incumbent(self) -> float:
        return self.records[-1].incumbent

    @property
    def incumbent_point(self) -> ExtendedPoint:
        best = min(self.records, key=lambda r: r.value)
        return best.point

    @property
    def incumbents(self) -> np.ndarray:
        return np.array([r.incumbent for r in self.records])


def _mean_std(model: GpModel, points: Sequence[ExtendedPoint]) -> tuple[np.ndarray, np.ndarray]:
    mu, var = model.predict(points)
    return mu, np.sqrt(var)


def ei_from_moments(mu: np.ndarray, sigma: np.ndarray, f_min: float) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros(np.broadcast(mu, sigma).shape)
    improve = f_min - mu
    pos = np.broadcast_to(sigma > 0, out.shape)
    sig = np.broadcast_to(sigma, out.shape)[pos]
    imp = np.broadcast_to(improve, out.shape)[pos]
    z = imp / sig
    out[pos] = imp * scipy.special.ndtr(z) + sig * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return np.maximum(out, 0.0)


def expected_improvement(model: GpModel, X: ExtendedPoint | Sequence[ExtendedPoint], f_min: float):
    """Expected improvement below ``f_min``; a scalar for one point, an array for a list."""
    single = isinstance(X, ExtendedPoint)
    mu, sigma = _mean_std(model, [X] if single else X)
    ei = ei_from_moments(mu, sigma, f_min)
    return float(ei[0]) if single else ei


def wb2s_scale(mu: np.ndarray, ei: np.ndarray) -> float:
    """``WB2S_SCALE * |mu(x*)| / EI(x*)`` at the pool's EI maximizer; 1 when that is not positive and finite."""
    if len(ei) == 0:
        return 1.0
    best = int(np.argmax(ei))
    if not ei[best] > 0:
        return 1.0
    s = WB2S_SCALE * abs(float(mu[best])) / float(ei[best])
    return s if (s > 0 and math.isfinite(s)) else 1.0


def wb2s_from_moments(mu, sigma, f_min: float, s: float) -> np.ndarray:
    return s * ei_from_moments(mu, sigma, f_min) - np.asarray(mu, dtype=float)


def wb2s(model: GpModel, X: ExtendedPoint | Sequence[ExtendedPoint], f_min: float, s: float):
    """``s * EI - mean`` (larger is better)."""
    if not (s > 0 and math.isfinite(s)):
        raise ValueError("s must be positive and finite")
    single = isinstance(X, ExtendedPoint)
    mu, sigma = _mean_std(model, [X] if single else X)
    out = wb2s_from_moments(mu, sigma, f_min, s)
    return float(out[0]) if single else out


def score(model: GpModel, candidates: Sequence[ExtendedPoint], f_min: float, acquisition: str = EI) -> np.ndarray:
    mu, sigma = _mean_std(model, candidates)
    ei = ei_from_moments(mu, sigma, f_min)
    if acquisition == EI:
        return ei
    if acquisition == WB2S:
        return wb2s_scale(mu, ei) * ei - mu
    raise ValueError(f"unknown acquisition {acquisition!r}")


def perturb(graph: DesignSpaceGraph, point: ExtendedPoint, rng: np.random.Generator, scale: float = 0.1) -> ExtendedPoint:
    """A random neighbor of ``point``, corrected back into the valid set.

    Each continuous value moves by a Gaussian step of ``scale`` times its range;
    each discrete variable is redrawn with probability ``1 / n_discrete``.
    """
    names = graph.design_names
    n_discrete = sum(1 for n in names if not graph.decl(n).is_continuous)
    p_switch = 1.0 / max(n_discrete, 1)
    raw: dict[str, Any] = {}
    for i, name in enumerate(names):
        decl = graph.decl(name)
        v = point.values[i]
        if decl.is_continuous:
            lo, hi = decl.domain
            if v is EXC:
                raw[name] = float(rng.uniform(lo, hi))
            else:
                raw[name] = float(v + rng.normal(0.0, scale * (hi - lo)))
        else:
            levels = decl.domain
            if v is EXC or rng.random() < p_switch:
                raw[name] = levels[int(rng.integers(len(levels)))]
            else:
                raw[name] = v
    return correct(graph, raw)[0]


def candidate_pool(graph: DesignSpaceGraph, incumbent: ExtendedPoint | None, pool_size: int, n_perturb: int,
                   seed, scale: float = 0.1) -> list[ExtendedPoint]:
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    # Children derived without spawn() so a caller's SeedSequence is never mutated.
    sample_seq, perturb_seq = (np.random.SeedSequence(seq.entropy, spawn_key=seq.spawn_key + (k,)) for k in (0, 1))
    pool = sample_valid(graph, pool_size, sample_seq)
    if incumbent is not None and n_perturb:
        rng = make_rng(perturb_seq)
        pool += [perturb(graph, incumbent, rng, scale) for _ in range(n_perturb)]
    return pool


def propose_next(
    model: GpModel,
    graph: DesignSpaceGraph,
    pool_size: int = 512,
    seed=0,
    acquisition: str = EI,
    n_perturb: int = 64,
    scale: float = 0.1,
) -> ExtendedPoint:
    """Highest-scoring candidate; ties go to the earliest candidate.

    Candidates identical to a training point are skipped unless nothing else is left.
    """
    y = model.dataset.y
    incumbent = model.dataset.points[int(np.argmin(y))]
    pool = candidate_pool(graph, incumbent, pool_size, n_perturb, seed, scale)
    seen = {p.values for p in model.dataset.points}
    fresh = [p for p in pool if p.values not in seen] or pool
    values = score(model, fresh, float(np.min(y)), acquisition)
    return fresh[int(np.argmax(values))]


def _record(iteration: int, point: ExtendedPoint, value: float, best: float, fallback: bool = False) -> TraceRecord:
    return TraceRecord(iteration, point, float(value), float(min(best, value)), fallback)


def _doe(problem: ProblemSpec, config: BoConfig) -> tuple[list[ExtendedPoint], list[TraceRecord]]:
    points = sample_valid(problem.graph, config.doe, np.random.SeedSequence([config.seed, _DOE]))
    records = []
    best = math.inf
    for k, p in enumerate(points):
        rec = _record(k - len(points), p, evaluate(problem, p), best)
        best = rec.incumbent
        records.append(rec)
    return points, records


def run_bo(problem: ProblemSpec, config: BoConfig = BoConfig()) -> BoTrace:
    """DoE, then ``config.budget`` rounds of fit, propose and evaluate."""
    graph = problem.graph
    points, doe_records = _doe(problem, config)
    targets = [r.value for r in doe_records]
    best = doe_records[-1].incumbent
    warm = None
    iterations = []
    for i in range(config.budget):
        pool_seed = np.random.SeedSequence([config.seed, _POOL, i])
        dataset = Dataset(points, targets, problem.name, config.seed)
        search = replace(config.search, seed=config.seed * 100_003 + i, warm_start=warm)
        fallback = False
        try:
            model = fit(graph, dataset, config.kernel, search)
            warm = tuple(model.hyperparams.theta)
            x = propose_next(model, graph, config.pool_size, pool_seed, config.acquisition,
                             config.n_perturb, config.perturb_scale)
        except (DegenerateError, SingularError):
            x = sample_valid(graph, 1, pool_seed)[0]
            fallback = True
        rec = _record(i, x, evaluate(problem, x), best, fallback)
        best = rec.incumbent
        iterations.append(rec)
        points.append(x)
        targets.append(rec.value)
    return BoTrace(problem.name, "bo", config.seed, tuple(doe_records), tuple(iterations))


def run_random_baseline(problem: ProblemSpec, config: BoConfig = BoConfig()) -> BoTrace:
    """Same DoE as :func:`run_bo`, then ``config.budget`` further random valid points."""
    _, doe_records = _doe(problem, config)
    best = doe_records[-1].incumbent
    extra = sample_valid(problem.graph, config.budget, np.random.SeedSequence([config.seed, _RANDOM]))
    iterations = []
    for i, x in enumerate(extra):
        rec = _record(i, x, evaluate(problem, x), best)
        best = rec.incumbent
        iterations.append(rec)
    return BoTrace(problem.name, "random", config.seed, tuple(doe_records), tuple(iterations))


def _run_named(args) -> BoTrace:
    method, name, config = args
    from .problems import get_problem

    runner = run_bo if method == "bo" else run_random_baseline
    return runner(get_problem(name), config)


def run_seeds(problem_name: str, config: BoConfig, seeds: Sequence[int], method: str = "bo",
              workers: int | None = None) -> list[BoTrace]:
    """One trace per seed, in seed order. Seeds are independent, so ``workers > 1`` runs them in processes."""
    if method not in ("bo", "random"):
        raise ValueError(f"unknown method {method!r}")
    jobs = [(method, problem_name, replace(config, seed=int(s))) for s in seeds]
    if not workers or workers <= 1 or len(jobs) <= 1:
        return [_run_named(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_named, jobs))


@dataclass(frozen=True)
class FinalSummary:
    median: float
    q1: float
    q3: float
    n: int


def summarize(finals: Sequence[float]) -> FinalSummary:
    arr = np.asarray(finals, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return FinalSummary(float(med), float(q1), float(q3), len(arr))


def trace_rows(trace: BoTrace, graph: DesignSpaceGraph) -> list[dict[str, Any]]:
    """One JSON-ready record per evaluation."""
    rows = []
    for rec in trace.records:
        rows.append({
            "problem": trace.problem,
            "method": trace.method,
            "seed": trace.seed,
            "iteration": rec.iteration,
            "point": {n: (None if v is EXC else v) for n, v in zip(graph.nodes, rec.point.values)},
            "value": rec.value,
            "incumbent": rec.incumbent,
            "fallback": rec.fallback,
        })
    return rows
