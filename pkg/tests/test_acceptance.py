"""Acceptance checks. Each test prints one PASS/FAIL line (also repeated in the terminal summary)."""

import time

import numpy as np
import pytest

from oracles import brute_force_configurations, declared_count
from hierdsg import _core
from hierdsg.bo import BoConfig, run_seeds
from hierdsg.configs import enumerate_discrete, hierarchical_names, sample_valid, stats
from hierdsg.distance import DistanceParams, alg_distance, encode_points, variable_distances
from hierdsg.errors import SearchExhaustedError
from hierdsg.gp import Dataset, fit
from hierdsg.io import emit_design_space, parse_design_space_text
from hierdsg.kernels import CR, GD, HIER, KernelHyperparams, gram, kernel_layout, naive_kernel_witness, spd_check
from hierdsg.points import correct, is_valid, make_point
from hierdsg.problems import evaluate, get_problem, list_problems

PROBLEMS = list_problems()


def test_dragon_lite_enumeration(verdict):
    # a freshly parsed graph, so no cached enumeration is reused
    g = parse_design_space_text(emit_design_space(get_problem("dragon_lite").graph))
    start = time.perf_counter()
    pairs = enumerate_discrete(g, project=hierarchical_names(g))
    elapsed = time.perf_counter() - start
    step = {2: 4, 4: 8, 6: 12}
    expected = {(c, m) for c in step for m in range(8, 41) if m % step[c] == 0}
    ok = len(pairs) == 17 and set(pairs) == expected and elapsed < 1.0
    assert verdict("dragon_lite enumeration", ok, f"{len(pairs)} (cores, motors) pairs in {elapsed * 1e3:.2f} ms")


def test_mlp_continuous_statistics(verdict):
    s = stats(get_problem("mlp").graph)
    ok = s.n_dim_cont == 7 and s.n_dim_cont_mean == 4 and s.cont_imp_ratio == 1.75 and s.n_declared == 2250
    detail = (f"n_dim_cont={s.n_dim_cont} n_dim_cont_mean={float(s.n_dim_cont_mean)} "
              f"cont_imp_ratio={float(s.cont_imp_ratio)} n_declared={s.n_declared}")
    assert verdict("mlp continuous statistics", ok, detail)


def test_mlp_conditional_substitute(verdict):
    # The conditional level sets are not available, so the substitute check applies:
    # complete enumeration equals independent brute-force filtering on every space.
    checked, mismatched = [], []
    for name in PROBLEMS:
        g = get_problem(name).graph
        if declared_count(g) > 10**5:
            continue
        checked.append(name)
        if set(enumerate_discrete(g)) != brute_force_configurations(g):
            mismatched.append(name)
    ok = not mismatched and len(checked) == len(PROBLEMS)
    detail = f"substitute check, enumeration equals brute force on {len(checked) - len(mismatched)}/{len(checked)} spaces"
    assert verdict("mlp conditional space", ok, detail)


def test_source_to_consumer_counts(verdict):
    g = get_problem("source_to_consumer").graph
    s = stats(g)
    brute = len(brute_force_configurations(g))
    ok = s.n_valid == 8 == brute and s.n_declared == 16 and s.imp_ratio == 2
    assert verdict("source_to_consumer", ok, f"{s.n_valid} valid of {s.n_declared}, imp_ratio={float(s.imp_ratio)}, brute force {brute}")


def _metric_violations(graph, seed, n_pool=200, n_triples=10_000):
    params = DistanceParams.default(graph)
    pool = sample_valid(graph, n_pool, seed)
    A = encode_points(graph, pool)
    # cross evaluation, so D[i, j] and D[j, i] are computed separately
    D = _core.minkowski(variable_distances(graph, A, A.copy(), params), params.p)
    rng = np.random.default_rng(seed)
    i, j, k = rng.integers(n_pool, size=(3, n_triples))
    same = np.array([[a == b for b in pool] for a in pool])
    bad = 0
    bad += int(np.sum(D[i, j] < 0))
    bad += int(np.sum(D[i, j] != D[j, i]))
    bad += int(np.sum((D[i, j] == 0) != same[i, j]))
    bad += int(np.sum(D[i, k] - D[i, j] - D[j, k] > 1e-12))
    return bad


def test_metric_suite(verdict):
    failures = {name: _metric_violations(get_problem(name).graph, 100 + n) for n, name in enumerate(PROBLEMS)}
    bad = {k: v for k, v in failures.items() if v}
    assert verdict("metric suite", not bad, f"10000 triples on each of {len(PROBLEMS)} problems, violations: {bad or 'none'}")


def test_spd_suite(verdict):
    worst = np.inf
    failures = []
    for name in PROBLEMS:
        g = get_problem(name).graph
        for kind in (HIER, GD, CR):
            sizes = kernel_layout(g, kind).group_sizes
            rng = np.random.default_rng([PROBLEMS.index(name), (HIER, GD, CR).index(kind)])
            for trial in range(100):
                sigma2 = float(10 ** rng.uniform(-1, 1))
                groups = [tuple(10 ** rng.uniform(-2, 2, n)) for n in sizes]
                hp = KernelHyperparams(kind, *groups, sigma2=sigma2, nugget=0.0)
                pts = sample_valid(g, int(rng.integers(2, 61)), int(rng.integers(2**31)))
                lam, ok = spd_check(gram(g, pts, hp), tol=1e-8 * sigma2)
                worst = min(worst, lam / sigma2)
                if not ok:
                    failures.append((name, kind, trial))
    detail = f"{len(PROBLEMS) * 300} Gram matrices, min eigenvalue / sigma2 = {worst:.3e}, failures: {len(failures)}"
    assert verdict("SPD suite", not failures, detail)


def test_non_spd_witness(verdict):
    g = get_problem("motors_propellers").graph
    w = naive_kernel_witness(g, 0, trials=10_000)
    try:
        naive_kernel_witness(g, 0, kind=HIER, trials=10_000)
        contrast = False
    except SearchExhaustedError:
        contrast = True
    ok = w.min_eigenvalue < -1e-10 and contrast
    detail = (f"naive kernel: eigenvalue {w.min_eigenvalue:.3e} at trial {w.trial} with {len(w.points)} points; "
              f"HIER: {'no witness' if contrast else 'witness found'} in 10000 trials")
    assert verdict("non-SPD witness", ok, detail)


def test_gp_interpolation(verdict):
    worst = 0.0
    nuggets = []
    for name in PROBLEMS:
        spec = get_problem(name)
        pts = sample_valid(spec.graph, 20, 0)
        y = np.array([evaluate(spec, p) for p in pts])
        m = fit(spec.graph, Dataset(pts, y))
        mu, _ = m.predict(pts)
        # relative to the target, or to the target range when the target is zero
        scale = np.maximum(np.abs(y), np.ptp(y))
        worst = max(worst, float(np.max(np.abs(mu - y) / scale)))
        nuggets.append(m.hyperparams.nugget / m.hyperparams.sigma2)
    ok = worst <= 1e-6 and max(nuggets) <= 1e-10 * (1 + 1e-9)
    detail = f"worst relative error {worst:.2e} over {len(PROBLEMS)} problems, relative nugget {max(nuggets):.1e}"
    assert verdict("GP interpolation", ok, detail)


@pytest.mark.slow
def test_bo_benefit(verdict):
    start = time.perf_counter()
    config = BoConfig(doe=10, budget=50)
    seeds = list(range(10))
    parts, ok = [], True
    for name in ("dragon_lite", "mlp"):
        bo = run_seeds(name, config, seeds, "bo")
        rnd = run_seeds(name, config, seeds, "random")
        spec = get_problem(name)
        assert all(is_valid(spec.graph, r.point) for t in bo + rnd for r in t.records)
        fb = np.array([t.final_incumbent for t in bo])
        fr = np.array([t.final_incumbent for t in rnd])
        wins = int(np.sum(fb < fr))
        ok = ok and np.median(fb) <= np.median(fr) and wins >= 7
        parts.append(f"{name} median {np.median(fb):.4f} vs random {np.median(fr):.4f}, {wins}/10 wins")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 900
    assert verdict("BO benefit", ok, "; ".join(parts) + f"; {elapsed:.0f} s")


def test_correction_throughput(verdict):
    g = get_problem("mlp").graph
    rng = np.random.default_rng(0)
    raws = []
    while len(raws) < 1000:
        raw = {}
        for n in g.design_names:
            decl = g.decl(n)
            raw[n] = float(rng.uniform(*decl.domain)) if decl.is_continuous else decl.domain[int(rng.integers(len(decl.domain)))]
        if not is_valid(g, make_point(g, raw)):
            raws.append(raw)
    start = time.perf_counter()
    out = [correct(g, r) for r in raws]
    elapsed = time.perf_counter() - start
    ok = elapsed < 10.0 and all(is_valid(g, p) and mask.tolist() == list(p.active) for p, mask in out)
    assert verdict("correction throughput", ok, f"1000 invalid mlp points corrected in {elapsed:.3f} s")


def test_algebraic_distance_supremum(verdict):
    x = np.concatenate([np.geomspace(1e-3, 1e3, 500_000), -np.geomspace(1e-3, 1e3, 500_000)])
    d = np.array([alg_distance(a, -1.0 / a) for a in x])
    sup = float(d.max())
    ok = abs(sup - 1.0) <= 1e-6 and sup <= 1.0 + 1e-15
    assert verdict("algebraic distance supremum", ok, f"max over 10^6 (x, -1/x) pairs = {sup:.12f}")
