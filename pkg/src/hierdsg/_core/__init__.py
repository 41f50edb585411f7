"""Inner loops for distances, kernels and predictions.

The compiled extension is used when it was built; otherwise, or when
``HIERDSG_PURE_PYTHON=1`` is set, the numpy fallback is used. Both give the
same results. Inputs are converted to contiguous float64 arrays here so the
two backends see identical data.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("HIERDSG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = compiled_backend
    BACKEND = "cython"
else:
    _impl = python_backend
    BACKEND = "python"

ALG, INDICATOR, ABSDIFF = 0, 1, 2


def _f64(a, ndim: int) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {out.shape}")
    return out


def var_distances(A, B, kinds, theta, delta, symmetric: bool = False, impl=None) -> np.ndarray:
    """Per-variable distances between the rows of ``A`` and ``B``, shape ``(n_vars, len(A), len(B))``.

    NaN entries mark excluded values. ``kinds`` selects the base distance per
    column (``ALG``, ``INDICATOR`` or ``ABSDIFF``).
    """
    impl = impl or _impl
    A = _f64(A, 2)
    B = A if symmetric else _f64(B, 2)
    if A.shape[1] != B.shape[1]:
        raise ValueError("column counts differ")
    return impl.var_distances(
        A, B, np.ascontiguousarray(kinds, dtype=np.intc), _f64(theta, 1), _f64(delta, 1), bool(symmetric)
    )


def weighted_exp(T, weights, squared: bool = False, impl=None) -> np.ndarray:
    """``exp(-sum_k weights[k] * T[k])`` (or ``T[k]**2``), accumulated in index order.

    The exponential is taken here rather than in the backends: libm and numpy
    may differ in the last bit.
    """
    impl = impl or _impl
    return np.exp(-impl.weighted_sum(_f64(T, 3), _f64(weights, 1), bool(squared)))


def minkowski(D, p: float, impl=None) -> np.ndarray:
    impl = impl or _impl
    if p not in (1.0, 2.0):
        # libm pow and np.power can disagree in the last bit; keep one code path.
        impl = python_backend
    return impl.minkowski(_f64(D, 3), float(p))


def forward_reduce(L, Kc, alpha, impl=None):
    """``(Kc.T @ alpha, ||L^-1 Kc||^2 per column)`` with a fixed summation order."""
    impl = impl or _impl
    return impl.forward_reduce(_f64(L, 2), _f64(Kc, 2), _f64(alpha, 1))
