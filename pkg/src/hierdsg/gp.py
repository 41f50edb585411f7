"""Gaussian-process regression over a design space.

The trend is a constant estimated by generalized least squares and the
process variance is profiled out, so the likelihood search only runs over the
kernel scales (in log10 space). Each start of the search is a bounded
Nelder-Mead run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import _core
from .configs import make_rng
from .errors import DegenerateError, InvalidPointError, SingularError, WidthError
from .graph import EXC, DesignSpaceGraph
from .io import design_space_document, graph_from_document
from .kernels import EXPONENTIAL, HIER, KernelHyperparams, kernel_layout
from .points import ExtendedPoint, is_valid

MODEL_FORMAT = "hierdsg-gp"
MODEL_VERSION = 1

#: Relative jitter ladder on the correlation diagonal.
NUGGET_START = 1e-10
NUGGET_MAX = 1e-6


@dataclass(frozen=True)
class Dataset:
    points: tuple[ExtendedPoint, ...]
    targets: tuple[float, ...]
    problem: str = ""
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        if len(self.points) != len(self.targets):
            raise ValueError(f"{len(self.points)} points but {len(self.targets)} targets")
        if not all(math.isfinite(t) for t in self.targets):
            raise ValueError("targets must be finite")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def y(self) -> np.ndarray:
        return np.array(self.targets)


@dataclass(frozen=True)
class SearchConfig:
    """Likelihood search settings: starts, evaluations per start, log10 bounds on the scales."""

    multistarts: int = 5
    max_evals: int = 200
    log10_bounds: tuple[float, float] = (-2.0, 2.0)
    seed: int = 0
    warm_start: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.multistarts < 1 or self.max_evals < 1:
            raise ValueError("multistarts and max_evals must be positive")
        lo, hi = self.log10_bounds
        if not lo < hi:
            raise ValueError("log10 bounds must satisfy lower < upper")


@dataclass
class _Factor:
    chol: np.ndarray  # lower factor of R + nugget * I
    nugget: float
    mean: float
    sigma2: float
    log_likelihood: float


def _factorize(R: np.ndarray, y: np.ndarray, nugget: float = NUGGET_START) -> _Factor | None:
    n = len(y)
    eye = np.eye(n)
    while nugget <= NUGGET_MAX * (1 + 1e-9):
        try:
            L = scipy.linalg.cholesky(R + nugget * eye, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError:
            # an explicit zero nugget that fails joins the usual ladder
            nugget = NUGGET_START if nugget == 0.0 else nugget * 10.0
            continue
        ones = np.ones(n)
        Ri_1 = scipy.linalg.cho_solve((L, True), ones, check_finite=False)
        Ri_y = scipy.linalg.cho_solve((L, True), y, check_finite=False)
        mean = float(ones @ Ri_y / (ones @ Ri_1))
        resid = y - mean
        quad = float(resid @ scipy.linalg.cho_solve((L, True), resid, check_finite=False))
        sigma2 = quad / n
        if not (sigma2 > 0 and math.isfinite(sigma2)):
            return None
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        ll = -0.5 * (n * math.log(2 * math.pi * sigma2) + logdet + n)
        return _Factor(L, nugget, mean, sigma2, ll)
    return None


@dataclass(frozen=True)
class LooResult:
    residuals: np.ndarray
    std: np.ndarray
    standardized: np.ndarray
    rmse: float
    coverage: float


class GpModel:
    """A fitted surrogate. Build one with :func:`fit` or :meth:`GpModel.from_hyperparams`."""

    def __init__(self, graph: DesignSpaceGraph, dataset: Dataset, hyperparams: KernelHyperparams,
                 mean: float, chol: np.ndarray, log_marginal_likelihood: float):
        self.graph = graph
        self.dataset = dataset
        self.hyperparams = hyperparams
        self.mean = float(mean)
        self.chol = chol  # lower factor of the covariance K = sigma2 * (R + nugget_rel * I)
        self.log_marginal_likelihood = float(log_marginal_likelihood)
        self.layout = kernel_layout(graph, hyperparams.kind)
        self._E = self.layout.encode(dataset.points)
        self._keys = self.layout.subspace_keys(dataset.points)
        resid = dataset.y - self.mean
        self.alpha = scipy.linalg.cho_solve((chol, True), resid, check_finite=False)

    @classmethod
    def from_hyperparams(cls, graph: DesignSpaceGraph, dataset: Dataset, hp: KernelHyperparams,
                         mean: float | None = None) -> "GpModel":
        """Factorize the covariance for fixed hyperparameters (escalating the nugget if needed)."""
        layout = kernel_layout(graph, hp.kind)
        E = layout.encode(dataset.points)
        keys = layout.subspace_keys(dataset.points)
        R = layout.correlation_from_terms(layout.terms(E, None), hp, (keys, keys))
        rel = 0.0 if hp.nugget == 0.0 else max(hp.nugget / hp.sigma2, NUGGET_START)
        factor = _factorize(R, dataset.y, rel)
        if factor is None:
            raise SingularError(f"covariance is not positive definite even with nugget {NUGGET_MAX:g}")
        hp = hp.with_theta(hp.theta, nugget=factor.nugget * hp.sigma2)
        mean = factor.mean if mean is None else mean
        n = len(dataset)
        L = factor.chol * math.sqrt(hp.sigma2)
        resid = dataset.y - mean
        quad = float(resid @ scipy.linalg.cho_solve((L, True), resid, check_finite=False))
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        ll = -0.5 * (n * math.log(2 * math.pi) + logdet + quad)
        return cls(graph, dataset, hp, mean, L, ll)

    def _check(self, points: Sequence[ExtendedPoint]) -> None:
        for p in points:
            if len(p.values) != self.graph.width:
                raise WidthError(f"point has {len(p.values)} entries, design space has {self.graph.width}")

    def predict(self, points: Sequence[ExtendedPoint]) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (clipped at zero) at each point."""
        points = list(points)
        self._check(points)
        if not points:
            return np.empty(0), np.empty(0)
        Eq = self.layout.encode(points)
        keys = (self._keys, self.layout.subspace_keys(points))
        Kc = self.layout.cross(self._E, Eq, self.hyperparams, keys)
        weighted, sq = _core.forward_reduce(self.chol, Kc, self.alpha)
        mean = self.mean + weighted
        sigma2 = self.hyperparams.sigma2
        var = sigma2 - sq
        # differences this small are rounding noise from the subtraction
        var[var <= len(self.dataset) * np.finfo(float).eps * sigma2] = 0.0
        return mean, var

    def predict_one(self, point: ExtendedPoint) -> tuple[float, float]:
        m, v = self.predict([point])
        return float(m[0]), float(v[0])

    def loo(self) -> LooResult:
        """Closed-form leave-one-out residuals ``y_i - prediction without i`` and their std."""
        n = len(self.dataset)
        if n < 3:
            raise DegenerateError("leave-one-out diagnostics need at least 3 points")
        try:
            inv = scipy.linalg.cho_solve((self.chol, True), np.eye(n), check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularError(str(exc)) from None
        diag = np.diag(inv)
        if np.any(diag <= 0):
            raise SingularError("covariance inverse has a non-positive diagonal")
        resid = self.alpha / diag
        std = np.sqrt(1.0 / diag)
        z = resid / std
        return LooResult(resid, std, z, float(np.sqrt(np.mean(resid**2))), float(np.mean(np.abs(z) <= 2.0)))

    # -- persistence ---------------------------------------------------------

    def to_document(self) -> dict:
        hp = self.hyperparams
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "design_space": design_space_document(self.graph),
            "problem": self.dataset.problem,
            "seed": self.dataset.seed,
            "kernel": {
                "kind": hp.kind,
                "theta_neu": list(hp.theta_neu),
                "theta_meta": list(hp.theta_meta),
                "theta_dec": list(hp.theta_dec),
                "sigma2": hp.sigma2,
                "nugget": hp.nugget,
                "form": hp.form,
            },
            "mean": self.mean,
            "log_marginal_likelihood": self.log_marginal_likelihood,
            "points": [[None if v is EXC else v for v in p.values] for p in self.dataset.points],
            "targets": list(self.dataset.targets),
        }

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "GpModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a saved model document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        graph = graph_from_document(doc["design_space"])
        points = tuple(ExtendedPoint(tuple(EXC if v is None else v for v in row)) for row in doc["points"])
        dataset = Dataset(points, doc["targets"], doc.get("problem", ""), doc.get("seed"))
        k = doc["kernel"]
        hp = KernelHyperparams(k["kind"], k["theta_neu"], k["theta_meta"], k["theta_dec"], k["sigma2"],
                               k["nugget"], k.get("form", EXPONENTIAL))
        return cls.from_hyperparams(graph, dataset, hp, doc["mean"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_document(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GpModel":
        return cls.from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_dataset(graph: DesignSpaceGraph, dataset: Dataset) -> None:
    if len(dataset) < 2:
        raise DegenerateError("fitting needs at least 2 points")
    y = dataset.y
    if np.all(y == y[0]):
        raise DegenerateError("all targets are equal; nothing to fit")
    for i, p in enumerate(dataset.points):
        report = is_valid(graph, p)
        if not report.valid:
            raise InvalidPointError(f"training point {i} is not valid: " + "; ".join(report.violations),
                                    report.violations)


def fit(
    graph: DesignSpaceGraph,
    dataset: Dataset,
    kind: str = HIER,
    search: SearchConfig = SearchConfig(),
    form: str = EXPONENTIAL,
) -> GpModel:
    """Maximize the concentrated log-likelihood over log10 scales; deterministic given ``search.seed``."""
    _check_dataset(graph, dataset)
    layout = kernel_layout(graph, kind)
    E = layout.encode(dataset.points)
    keys = layout.subspace_keys(dataset.points)
    T = layout.terms(E, None)
    y = dataset.y
    base = KernelHyperparams.default(graph, kind, form=form)
    n_params = layout.n_params
    lo, hi = search.log10_bounds
    cache: dict[bytes, float] = {}
    best: dict[str, Any] = {"f": math.inf, "x": None}

    def objective(x: np.ndarray) -> float:
        x = np.clip(x, lo, hi)
        key = x.tobytes()
        if key in cache:
            return cache[key]
        hp = base.with_theta(10.0**x)
        R = layout.correlation_from_terms(T, hp, (keys, keys))
        factor = _factorize(R, y)
        f = math.inf if factor is None else -factor.log_likelihood
        cache[key] = f
        if f < best["f"]:
            best["f"], best["x"] = f, x.copy()
        return f

    rng = make_rng(np.random.SeedSequence([int(search.seed), 11]))
    starts = []
    if search.warm_start is not None and len(search.warm_start) == n_params:
        starts.append(np.clip(np.log10(np.asarray(search.warm_start, dtype=float)), lo, hi))
    else:
        starts.append(np.zeros(n_params) if lo <= 0 <= hi else np.full(n_params, 0.5 * (lo + hi)))
    while len(starts) < search.multistarts:
        starts.append(rng.uniform(lo, hi, size=n_params))
    bounds = [(lo, hi)] * n_params
    for x0 in starts:
        objective(x0)
        if n_params == 0:
            break
        scipy.optimize.minimize(
            objective, x0, method="Nelder-Mead", bounds=bounds,
            options={"maxfev": search.max_evals, "xatol": 1e-4, "fatol": 1e-8},
        )
    if best["x"] is None:
        raise SingularError(f"no scale vector gave a factorizable covariance (nugget up to {NUGGET_MAX:g})")
    hp_corr = base.with_theta(10.0 ** best["x"])
    R = layout.correlation_from_terms(T, hp_corr, (keys, keys))
    factor = _factorize(R, y)
    hp = hp_corr.with_theta(hp_corr.theta, sigma2=factor.sigma2, nugget=factor.nugget * factor.sigma2)
    L = factor.chol * math.sqrt(factor.sigma2)
    return GpModel(graph, dataset, hp, factor.mean, L, factor.log_likelihood)


def fit_start_likelihoods(graph: DesignSpaceGraph, dataset: Dataset, kind: str, search: SearchConfig) -> list[float]:
    """Concentrated log-likelihood at each multistart initial point (for diagnostics)."""
    layout = kernel_layout(graph, kind)
    E = layout.encode(dataset.points)
    keys = layout.subspace_keys(dataset.points)
    T = layout.terms(E, None)
    base = KernelHyperparams.default(graph, kind)
    lo, hi = search.log10_bounds
    rng = make_rng(np.random.SeedSequence([int(search.seed), 11]))
    starts = []
    if search.warm_start is not None and len(search.warm_start) == layout.n_params:
        starts.append(np.clip(np.log10(np.asarray(search.warm_start, dtype=float)), lo, hi))
    else:
        starts.append(np.zeros(layout.n_params) if lo <= 0 <= hi else np.full(layout.n_params, 0.5 * (lo + hi)))
    while len(starts) < search.multistarts:
        starts.append(rng.uniform(lo, hi, size=layout.n_params))
    out = []
    for x0 in starts:
        R = layout.correlation_from_terms(T, base.with_theta(10.0**x0), (keys, keys))
        factor = _factorize(R, dataset.y)
        out.append(-math.inf if factor is None else factor.log_likelihood)
    return out
