"""Correlation kernels over extended points and Gram-matrix utilities.

Every kernel is ``sigma2 * exp(-sum_j w_j * t_j)`` over a list of terms
``t_j``, each a one-dimensional distance between two encoded coordinates. A
:class:`KernelLayout` says, for one kernel kind and one design space, which
coordinates exist, which base distance each uses and which scale parameter
multiplies it.

HIER
    neutral variables, then the meta variables (categorical by indicator,
    finite quantitative by rank difference, continuous by algebraic
    distance), then meta and decreed variables together with the exclusion
    constant for one-sided exclusions. Parameters: ``theta_neu``,
    ``theta_meta``, ``theta_dec`` (the last covers meta then decreed).
GD
    Gower: mean over variables of the absolute rescaled difference
    (indicator for categorical), one scale per variable.
CR
    continuous relaxation: quantitative variables as in the neutral factor,
    each categorical variable replaced by one 0/1 column per level.
NAIVE-TEST
    decreed-only kernel inside a subspace and a meta-only kernel across
    subspaces. Not positive definite in general; kept for the counterexample
    search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from . import _core
from .configs import make_rng, sample_valid
from .distance import ALGEBRAIC, INDICATOR, base_metric, code_value
from .errors import HyperparamError, NonSymmetricError, SearchExhaustedError, WidthError
from .graph import CATEGORICAL, EXC, DesignSpaceGraph
from .points import ExtendedPoint

HIER = "HIER"
GD = "GD"
CR = "CR"
NAIVE = "NAIVE-TEST"
KINDS = (HIER, GD, CR, NAIVE)

EXPONENTIAL = "exponential"
SQUARED_EXPONENTIAL = "squared_exponential"

#: Exclusion constant used inside kernels (per unit of scale).
KERNEL_DELTA = 0.5

_ALG, _IND, _ABS = _core.ALG, _core.INDICATOR, _core.ABSDIFF


@dataclass(frozen=True)
class KernelHyperparams:
    """Kernel kind, positive scale vectors, process variance and diagonal jitter.

    ``nugget`` is an absolute value added to the Gram diagonal; it defaults
    to ``1e-10 * sigma2``. GD and CR keep all scales in ``theta_neu``.
    """

    kind: str
    theta_neu: tuple[float, ...] = ()
    theta_meta: tuple[float, ...] = ()
    theta_dec: tuple[float, ...] = ()
    sigma2: float = 1.0
    nugget: float | None = None
    form: str = EXPONENTIAL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise HyperparamError(f"unknown kernel kind {self.kind!r}")
        if self.form not in (EXPONENTIAL, SQUARED_EXPONENTIAL):
            raise HyperparamError(f"unknown kernel form {self.form!r}")
        for name in ("theta_neu", "theta_meta", "theta_dec"):
            values = tuple(float(t) for t in getattr(self, name))
            if any(not (t > 0 and math.isfinite(t)) for t in values):
                raise HyperparamError(f"{name} entries must be positive and finite")
            object.__setattr__(self, name, values)
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise HyperparamError("sigma2 must be positive and finite")
        nugget = 1e-10 * self.sigma2 if self.nugget is None else float(self.nugget)
        if not (nugget >= 0 and math.isfinite(nugget)):
            raise HyperparamError("nugget must be non-negative")
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "nugget", nugget)

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.theta_neu + self.theta_meta + self.theta_dec)

    def with_theta(self, theta: Sequence[float], **changes: Any) -> "KernelHyperparams":
        """Same kind and grouping with a new flat scale vector."""
        n1, n2 = len(self.theta_neu), len(self.theta_meta)
        theta = tuple(float(t) for t in theta)
        if len(theta) != n1 + n2 + len(self.theta_dec):
            raise HyperparamError("flat theta has the wrong length")
        return replace(self, theta_neu=theta[:n1], theta_meta=theta[n1 : n1 + n2], theta_dec=theta[n1 + n2 :], **changes)

    @classmethod
    def default(cls, graph: DesignSpaceGraph, kind: str = HIER, sigma2: float = 1.0, **kw: Any) -> "KernelHyperparams":
        sizes = kernel_layout(graph, kind).group_sizes
        return cls(kind, (1.0,) * sizes[0], (1.0,) * sizes[1], (1.0,) * sizes[2], sigma2, **kw)


@dataclass(frozen=True)
class _Column:
    var: str
    kind: int
    param: int
    scale: float = 1.0
    coding: str = "base"  # base | rank | onehot
    level: Any = None


@dataclass
class KernelLayout:
    graph: DesignSpaceGraph
    kind: str
    columns: list[_Column]
    group_sizes: tuple[int, int, int]
    key_vars: tuple[str, ...] = ()
    # NAIVE-TEST only: which columns are neutral, decreed, and which params index the key.
    groups: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kinds = np.array([c.kind for c in self.columns], dtype=np.intc)
        self.delta = np.full(len(self.columns), KERNEL_DELTA)
        self.ones = np.ones(len(self.columns))
        self.params = np.array([c.param for c in self.columns], dtype=np.intp)
        self.scales = np.array([c.scale for c in self.columns])
        self._pos = [self.graph.index(c.var) for c in self.columns]
        self._decls = [self.graph.decl(c.var) for c in self.columns]
        self._key_pos = [self.graph.index(n) for n in self.key_vars]

    @property
    def n_params(self) -> int:
        return sum(self.group_sizes)

    def check(self, hp: KernelHyperparams) -> None:
        if hp.kind != self.kind:
            raise HyperparamError(f"hyperparameters are for {hp.kind}, layout is {self.kind}")
        got = (len(hp.theta_neu), len(hp.theta_meta), len(hp.theta_dec))
        if got != self.group_sizes:
            raise HyperparamError(f"{self.kind} on {self.graph.name} needs scale groups {self.group_sizes}, got {got}")

    def encode(self, points: Sequence[ExtendedPoint]) -> np.ndarray:
        out = np.empty((len(points), len(self.columns)))
        width = self.graph.width
        for r, point in enumerate(points):
            if len(point.values) != width:
                raise WidthError(f"point has {len(point.values)} entries, design space has {width}")
            for c, (col, decl, pos) in enumerate(zip(self.columns, self._decls, self._pos)):
                v = point.values[pos]
                if col.coding == "onehot":
                    out[r, c] = 0.0 if v is EXC or v != col.level else 1.0
                elif v is EXC:
                    out[r, c] = np.nan
                elif col.coding == "rank":
                    levels = decl.levels
                    code_value(decl, v)
                    out[r, c] = decl.level_index(v) / (len(levels) - 1) if len(levels) > 1 else 0.0
                else:
                    out[r, c] = code_value(decl, v)
        return out

    def subspace_keys(self, points: Sequence[ExtendedPoint]) -> list[tuple]:
        return [tuple(p.values[i] for i in self._key_pos) for p in points]

    def terms(self, EA: np.ndarray, EB: np.ndarray | None) -> np.ndarray:
        symmetric = EB is None
        return _core.var_distances(EA, EA if symmetric else EB, self.kinds, self.ones, self.delta, symmetric)

    def weights(self, hp: KernelHyperparams) -> np.ndarray:
        return hp.theta[self.params] * self.scales

    def correlation_from_terms(self, T: np.ndarray, hp: KernelHyperparams, keys=None) -> np.ndarray:
        squared = hp.form == SQUARED_EXPONENTIAL
        w = self.weights(hp)
        if self.kind != NAIVE:
            return _core.weighted_exp(T, w, squared)
        g = self.groups
        neu = _core.weighted_exp(T[g["neu"]], w[g["neu"]], squared)
        dec = _core.weighted_exp(T[g["dec"]], w[g["dec"]], squared)
        meta = _core.weighted_exp(T[g["key"]], w[g["key"]], squared)
        keys_a, keys_b = keys
        same = np.array([[ka == kb for kb in keys_b] for ka in keys_a], dtype=bool).reshape(T.shape[1:])
        return np.where(same, dec, meta) * neu

    def cross(self, EA, EB, hp: KernelHyperparams, keys=None) -> np.ndarray:
        """Covariance between two encoded point sets (no nugget)."""
        self.check(hp)
        return hp.sigma2 * self.correlation_from_terms(self.terms(EA, EB), hp, keys)

    def gram_encoded(self, E, hp: KernelHyperparams, keys=None) -> np.ndarray:
        self.check(hp)
        K = hp.sigma2 * self.correlation_from_terms(self.terms(E, None), hp, keys)
        K[np.diag_indices_from(K)] += hp.nugget
        return K


def _partition(graph: DesignSpaceGraph):
    neutral, meta, dec = [], [], []
    for name in graph.design_names:
        has_parents = bool(graph.parents(name))
        has_children = bool(graph.children(name))
        if has_parents:
            dec.append(name)
        elif has_children:
            meta.append(name)
        else:
            neutral.append(name)
    return neutral, meta, dec


_BASE_CODE = {ALGEBRAIC: _ALG, INDICATOR: _IND}


def _base_column(graph, name, param, scale=1.0) -> _Column:
    return _Column(name, _BASE_CODE.get(base_metric(graph.decl(name)), _ABS), param, scale)


def _build_layout(graph: DesignSpaceGraph, kind: str) -> KernelLayout:
    if kind == HIER:
        neutral, meta, dec = _partition(graph)
        cols = [_base_column(graph, n, i) for i, n in enumerate(neutral)]
        off = len(neutral)
        for j, n in enumerate(meta):
            decl = graph.decl(n)
            if decl.vtype == CATEGORICAL:
                cols.append(_Column(n, _IND, off + j))
            elif decl.is_continuous:
                cols.append(_Column(n, _ALG, off + j))
            else:
                cols.append(_Column(n, _ABS, off + j, coding="rank"))
        off += len(meta)
        cols += [_base_column(graph, n, off + j) for j, n in enumerate(meta + dec)]
        return KernelLayout(graph, kind, cols, (len(neutral), len(meta), len(meta) + len(dec)))
    if kind == GD:
        names = graph.design_names
        scale = 1.0 / len(names)
        cols = []
        for i, n in enumerate(names):
            decl = graph.decl(n)
            cols.append(_Column(n, _IND if decl.vtype == CATEGORICAL else _ABS, i, scale))
        return KernelLayout(graph, kind, cols, (len(names), 0, 0))
    if kind == CR:
        cols = []
        for n in graph.design_names:
            decl = graph.decl(n)
            if decl.vtype == CATEGORICAL:
                cols += [_Column(n, _ABS, len(cols) + k, coding="onehot", level=lv) for k, lv in enumerate(decl.levels)]
            else:
                cols.append(_base_column(graph, n, len(cols)))
        return KernelLayout(graph, kind, cols, (len(cols), 0, 0))
    if kind == NAIVE:
        neutral, _, _ = _partition(graph)
        keys = tuple(n for n in graph.design_names if graph.children(n))
        leaves = tuple(n for n in graph.design_names if graph.parents(n) and not graph.children(n))
        cols = [_base_column(graph, n, i) for i, n in enumerate(neutral)]
        off = len(neutral)
        # Key columns: indicator on the level index, EXC counts as its own value.
        key_cols = [_Column(n, _IND, off + j, coding="rank") for j, n in enumerate(keys)]
        off += len(keys)
        dec_cols = [_base_column(graph, n, off + j) for j, n in enumerate(leaves)]
        groups = {
            "neu": np.arange(len(cols)),
            "key": np.arange(len(cols), len(cols) + len(key_cols)),
            "dec": np.arange(len(cols) + len(key_cols), len(cols) + len(key_cols) + len(dec_cols)),
        }
        layout = KernelLayout(
            graph, kind, cols + key_cols + dec_cols, (len(neutral), len(keys), len(leaves)), keys, groups
        )
        # A key mismatch between a value and EXC must count as 1, not as delta.
        layout.delta[groups["key"]] = 1.0
        return layout
    raise HyperparamError(f"unknown kernel kind {kind!r}")


def kernel_layout(graph: DesignSpaceGraph, kind: str) -> KernelLayout:
    key = ("kernel_layout", kind)
    layout = graph._cache.get(key)
    if layout is None:
        layout = _build_layout(graph, kind)
        graph._cache[key] = layout
    return layout


def _keys(layout: KernelLayout, A, B=None):
    if layout.kind != NAIVE:
        return None
    ka = layout.subspace_keys(A)
    return (ka, ka if B is None else layout.subspace_keys(B))


def kernel(graph: DesignSpaceGraph, X: ExtendedPoint, X2: ExtendedPoint, hp: KernelHyperparams) -> float:
    """Covariance between two points under ``hp.kind`` (no nugget)."""
    layout = kernel_layout(graph, hp.kind)
    layout.check(hp)
    EA, EB = layout.encode([X]), layout.encode([X2])
    return float(layout.cross(EA, EB, hp, _keys(layout, [X], [X2]))[0, 0])


def k_hier(graph, X, X2, hp: KernelHyperparams) -> float:
    if hp.kind != HIER:
        raise HyperparamError("k_hier needs HIER hyperparameters")
    return kernel(graph, X, X2, hp)


def k_gower(graph, X, X2, hp: KernelHyperparams) -> float:
    if hp.kind != GD:
        raise HyperparamError("k_gower needs GD hyperparameters")
    return kernel(graph, X, X2, hp)


def k_cr(graph, X, X2, hp: KernelHyperparams) -> float:
    if hp.kind != CR:
        raise HyperparamError("k_cr needs CR hyperparameters")
    return kernel(graph, X, X2, hp)


def k_naive(graph, X, X2, hp: KernelHyperparams) -> float:
    if hp.kind != NAIVE:
        raise HyperparamError("k_naive needs NAIVE-TEST hyperparameters")
    return kernel(graph, X, X2, hp)


def hier_factors(graph: DesignSpaceGraph, X: ExtendedPoint, X2: ExtendedPoint, hp: KernelHyperparams) -> dict[str, float]:
    """The neutral, meta and meta-decreed factors whose product (times sigma2) is ``k_hier``."""
    layout = kernel_layout(graph, HIER)
    layout.check(hp)
    T = layout.terms(layout.encode([X]), layout.encode([X2]))
    w = layout.weights(hp)
    squared = hp.form == SQUARED_EXPONENTIAL
    n1, n2, _ = layout.group_sizes
    out = {}
    for label, sl in (("neu", slice(0, n1)), ("meta", slice(n1, n1 + n2)), ("metadec", slice(n1 + n2, None))):
        out[label] = float(_core.weighted_exp(T[sl], w[sl], squared)[0, 0])
    return out


def gram(graph: DesignSpaceGraph, points: Sequence[ExtendedPoint], hp: KernelHyperparams) -> np.ndarray:
    """Covariance matrix of ``points``; the diagonal is ``sigma2 + nugget``."""
    if not len(points):
        raise ValueError("need at least one point")
    layout = kernel_layout(graph, hp.kind)
    return layout.gram_encoded(layout.encode(points), hp, _keys(layout, points))


def cross_covariance(graph, A: Sequence[ExtendedPoint], B: Sequence[ExtendedPoint], hp: KernelHyperparams) -> np.ndarray:
    layout = kernel_layout(graph, hp.kind)
    return layout.cross(layout.encode(A), layout.encode(B), hp, _keys(layout, A, B))


def spd_check(K: np.ndarray, tol: float = 1e-8) -> tuple[float, bool]:
    """Smallest eigenvalue of the symmetric matrix ``K`` and whether it is at least ``-tol``."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise NonSymmetricError(f"expected a square matrix, got shape {K.shape}")
    scale = max(1.0, float(np.max(np.abs(K)))) if K.size else 1.0
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-12 * scale:
        raise NonSymmetricError("matrix is not symmetric")
    lam = float(scipy.linalg.eigvalsh(K, subset_by_index=[0, 0])[0])
    return lam, lam >= -tol


@dataclass(frozen=True)
class Witness:
    points: tuple[ExtendedPoint, ...]
    min_eigenvalue: float
    hyperparams: KernelHyperparams
    trial: int


def naive_kernel_witness(
    graph: DesignSpaceGraph,
    seed: int = 0,
    *,
    kind: str = NAIVE,
    trials: int = 10_000,
    pool_size: int = 64,
    threshold: float = -1e-10,
) -> Witness:
    """Random search for a small point set whose Gram matrix has an eigenvalue below ``threshold``.

    Each trial picks 3 to 6 distinct points from a pool of valid samples and
    scales drawn log-uniformly in [1e-2, 1e2], with ``sigma2 = 1`` and no
    nugget. Raises SearchExhaustedError when no trial succeeds; with
    ``kind=HIER`` that is the expected outcome.
    """
    layout = kernel_layout(graph, kind)
    rng = make_rng(np.random.SeedSequence([int(seed), 7]))
    pool = sample_valid(graph, pool_size, np.random.SeedSequence([int(seed), 8]))
    E = layout.encode(pool)
    T = layout.terms(E, None)
    keys = layout.subspace_keys(pool) if kind == NAIVE else None
    n1, n2, n3 = layout.group_sizes
    base = KernelHyperparams(kind, (1.0,) * n1, (1.0,) * n2, (1.0,) * n3, 1.0, 0.0)
    n_pool = len(pool)
    for trial in range(trials):
        size = int(rng.integers(3, 7))
        if size > n_pool:
            size = n_pool
        idx = np.sort(rng.choice(n_pool, size=size, replace=False))
        theta = 10.0 ** rng.uniform(-2.0, 2.0, size=layout.n_params)
        hp = base.with_theta(theta)
        sub = np.ascontiguousarray(T[:, idx][:, :, idx])
        sub_keys = None
        if keys is not None:
            ks = [keys[i] for i in idx]
            sub_keys = (ks, ks)
        K = layout.correlation_from_terms(sub, hp, sub_keys)
        lam = float(np.linalg.eigvalsh(K)[0])
        if lam < threshold:
            return Witness(tuple(pool[i] for i in idx), lam, hp, trial)
    raise SearchExhaustedError(f"no {kind} Gram matrix below {threshold} in {trials} trials")
