"""Time the compiled inner loops against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200] [--repeat 5]

Prints one line per loop with the best-of-``repeat`` time for each backend,
the speedup and whether the two outputs are bit-identical.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from hierdsg import _core
from hierdsg.configs import sample_valid
from hierdsg.kernels import HIER, KernelHyperparams, kernel_layout
from hierdsg.problems import get_problem


def _cases(n: int, problem: str):
    graph = get_problem(problem).graph
    layout = kernel_layout(graph, HIER)
    E = layout.encode(sample_valid(graph, n, 0))
    Q = layout.encode(sample_valid(graph, n, 1))
    hp = KernelHyperparams.default(graph, HIER)
    w = layout.weights(hp)
    T = layout.terms(E, None)
    K = np.exp(-np.abs(np.subtract.outer(np.arange(n), np.arange(n))) / n) + 1e-6 * np.eye(n)
    L = np.linalg.cholesky(K)
    Kc = _core.weighted_exp(layout.terms(E, Q), w)
    alpha = np.random.default_rng(0).normal(size=n)
    args = (layout.kinds, layout.ones, layout.delta)
    return {
        "var_distances (symmetric)": lambda impl: _core.var_distances(E, None, *args, symmetric=True, impl=impl),
        "var_distances (cross)": lambda impl: _core.var_distances(E, Q, *args, impl=impl),
        "weighted_exp": lambda impl: _core.weighted_exp(T, w, impl=impl),
        "minkowski p=2": lambda impl: _core.minkowski(T, 2.0, impl=impl),
        "forward_reduce": lambda impl: _core.forward_reduce(L, Kc, alpha, impl=impl),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y, equal_nan=True) for x, y in zip(a, b))
    return np.array_equal(a, b, equal_nan=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200, help="points per set")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--problem", default="dragon_lite")
    args = parser.parse_args(argv)
    if _core.compiled_backend is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"problem={args.problem} n={args.n} repeat={args.repeat}")
    print(f"{'loop':28s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  identical")
    for name, fn in _cases(args.n, args.problem).items():
        times = {}
        for label, impl in (("cython", _core.compiled_backend), ("python", _core.python_backend)):
            times[label] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        same = _same(fn(_core.compiled_backend), fn(_core.python_backend))
        print(f"{name:28s} {times['cython']:10.5f} {times['python']:10.5f} "
              f"{times['python'] / times['cython']:7.1f}x  {'yes' if same else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
