import json

import numpy as np
import pytest

from hierdsg.configs import sample_valid
from hierdsg.errors import DegenerateError, InvalidPointError, WidthError
from hierdsg.graph import CATEGORICAL, CONTINUOUS, VariableDecl, build_graph
from hierdsg.gp import Dataset, GpModel, SearchConfig, fit, fit_start_likelihoods
from hierdsg.kernels import GD, HIER, KernelHyperparams, gram
from hierdsg.points import ExtendedPoint, make_point
from hierdsg.problems import evaluate, get_problem

LINE = build_graph([VariableDecl("x", CONTINUOUS, (0, 1))], name="line")


def line_data(xs, f):
    return Dataset([ExtendedPoint((float(x),)) for x in xs], [f(x) for x in xs])


def problem_data(name, n, seed):
    spec = get_problem(name)
    pts = sample_valid(spec.graph, n, seed)
    return spec.graph, Dataset(pts, [evaluate(spec, p) for p in pts], name, seed)


@pytest.fixture(scope="module")
def mlp_model():
    g, ds = problem_data("mlp", 25, 0)
    return g, fit(g, ds)


def test_two_points():
    m = fit(LINE, line_data([0.1, 0.8], lambda x: x))
    assert np.isfinite(m.log_marginal_likelihood)
    assert m.chol.shape == (2, 2)


def test_rejects_degenerate_inputs():
    with pytest.raises(DegenerateError):
        fit(LINE, line_data([0.3], lambda x: x))
    with pytest.raises(DegenerateError):
        fit(LINE, line_data([0.1, 0.5, 0.9], lambda x: 2.0))
    with pytest.raises(InvalidPointError):
        fit(LINE, line_data([0.1, 1.5], lambda x: x))
    with pytest.raises(ValueError):
        Dataset([ExtendedPoint((0.1,))], [float("nan")])


def test_sine_beats_constant_predictor():
    xs = np.linspace(0, 1, 20)
    m = fit(LINE, line_data(xs, lambda x: np.sin(12 * x)))
    test = np.random.default_rng(0).uniform(0, 1, 200)
    mu, var = m.predict([ExtendedPoint((float(x),)) for x in test])
    truth = np.sin(12 * test)
    rmse = np.sqrt(np.mean((mu - truth) ** 2))
    baseline = np.sqrt(np.mean((np.mean(np.sin(12 * xs)) - truth) ** 2))
    assert rmse < baseline
    assert np.all(var >= 0)


def test_duplicate_point_escalates_nugget():
    ds = line_data([0.2, 0.2, 0.6, 0.9], lambda x: x * x)
    m = fit(LINE, ds)
    assert m.hyperparams.nugget > 0
    assert np.all(np.isfinite(m.alpha))


def test_interpolates_training_points(mlp_model):
    g, m = mlp_model
    mu, var = m.predict(m.dataset.points)
    y = m.dataset.y
    assert m.hyperparams.nugget <= 1e-6 * m.hyperparams.sigma2
    assert np.all(np.abs(mu - y) <= 1e-6 * np.maximum(np.abs(y), 1.0))
    assert np.all(var <= 1e-6 * m.hyperparams.sigma2)


def test_far_point_reverts_to_prior():
    levels = tuple(f"L{i}" for i in range(12))
    g = build_graph([VariableDecl("c", CATEGORICAL, levels)], name="cat")
    y = np.random.default_rng(0).normal(size=10)
    m = fit(g, Dataset([ExtendedPoint((lv,)) for lv in levels[:10]], y))
    theta = m.hyperparams.theta_neu[0]
    decay = np.exp(-theta)
    mu, var = m.predict([ExtendedPoint(("L11",))])
    # the cross-covariance is sigma2 * exp(-theta) against every training point
    assert decay < 1e-3
    assert abs(mu[0] - m.mean) <= 1e-3 * np.ptp(y)
    assert abs(var[0] - m.hyperparams.sigma2) <= 1e-3 * m.hyperparams.sigma2


def test_batch_prediction_is_bit_exact(mlp_model):
    g, m = mlp_model
    pts = sample_valid(g, 30, 77)
    mu, var = m.predict(pts)
    for i, p in enumerate(pts):
        assert m.predict_one(p) == (mu[i], var[i])


def test_cholesky_reconstructs_gram(mlp_model):
    g, m = mlp_model
    K = gram(g, m.dataset.points, m.hyperparams)
    L = m.chol
    assert np.allclose(np.tril(L), L)
    assert np.linalg.norm(L @ L.T - K) <= 1e-8 * np.linalg.norm(K)
    assert np.allclose(K @ m.alpha, m.dataset.y - m.mean, atol=1e-8 * np.abs(m.dataset.y).max())


def test_fit_is_monotone_over_starts():
    g, ds = problem_data("dragon_lite", 15, 2)
    search = SearchConfig(multistarts=3, max_evals=60, seed=4)
    m = fit(g, ds, search=search)
    starts = fit_start_likelihoods(g, ds, HIER, search)
    assert len(starts) == 3
    assert all(m.log_marginal_likelihood >= s - 1e-9 for s in starts if np.isfinite(s))


def test_fit_is_deterministic():
    g, ds = problem_data("hybrid_energy", 12, 1)
    search = SearchConfig(multistarts=2, max_evals=50, seed=9)
    a, b = fit(g, ds, search=search), fit(g, ds, search=search)
    assert a.hyperparams == b.hyperparams and np.array_equal(a.chol, b.chol)


def test_permutation_invariance(mlp_model):
    g, m = mlp_model
    perm = np.random.default_rng(3).permutation(len(m.dataset))
    ds = Dataset([m.dataset.points[i] for i in perm], [m.dataset.targets[i] for i in perm])
    other = GpModel.from_hyperparams(g, ds, m.hyperparams)
    pts = sample_valid(g, 20, 5)
    mu1, var1 = m.predict(pts)
    mu2, var2 = other.predict(pts)
    scale = np.ptp(m.dataset.y)
    assert np.all(np.abs(mu1 - mu2) <= 1e-10 * scale)
    assert np.all(np.abs(var1 - var2) <= 1e-10 * m.hyperparams.sigma2)


def test_variance_non_negative(mlp_model):
    g, m = mlp_model
    _, var = m.predict(sample_valid(g, 10_000, 13))
    assert np.all(var >= 0)


def test_loo_linear_data():
    xs = np.linspace(0, 1, 15)
    m = fit(LINE, line_data(xs, lambda x: 3 * x + 1))
    assert m.loo().rmse < np.std(3 * xs + 1)


def test_loo_follows_relabeling():
    xs = [0.0, 0.5, 1.0]
    ds = line_data(xs, lambda x: (x - 0.3) ** 2)
    hp = KernelHyperparams(HIER, (2.0,), sigma2=1.0)
    r = GpModel.from_hyperparams(LINE, ds, hp).loo().residuals
    perm = [2, 0, 1]
    shuffled = Dataset([ds.points[i] for i in perm], [ds.targets[i] for i in perm])
    r2 = GpModel.from_hyperparams(LINE, shuffled, hp).loo().residuals
    assert np.allclose(r2, r[perm], rtol=1e-10, atol=0)
    with pytest.raises(DegenerateError):
        fit(LINE, line_data([0.1, 0.9], lambda x: x)).loo()


def test_loo_equal_distance_design():
    g = build_graph([VariableDecl("c", CATEGORICAL, ("a", "b", "c"))], name="tri")
    ds = Dataset([ExtendedPoint((v,)) for v in "abc"], [1.0, 0.0, 1.0])
    r = GpModel.from_hyperparams(g, ds, KernelHyperparams(HIER, (0.7,))).loo().residuals
    assert r[0] == pytest.approx(r[2], rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_loo_coverage(seed):
    g = build_graph([VariableDecl("x", CONTINUOUS, (0, 1)), VariableDecl("y", CONTINUOUS, (0, 1))], name="plane")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (100, 2))
    ds = Dataset([ExtendedPoint(tuple(map(float, r))) for r in X], np.sin(5 * X[:, 0]) + np.cos(3 * X[:, 1]))
    cov = fit(g, ds, search=SearchConfig(multistarts=2, max_evals=80, seed=seed)).loo().coverage
    assert 0.8 <= cov <= 1.0


def test_save_and_load(tmp_path, mlp_model):
    g, m = mlp_model
    path = tmp_path / "model.json"
    m.save(path)
    doc = json.loads(path.read_text())
    assert doc["problem"] == "mlp" and doc["seed"] == 0
    again = GpModel.load(path)
    pts = sample_valid(g, 10, 1)
    assert np.allclose(again.predict(pts)[0], m.predict(pts)[0], rtol=0, atol=1e-12 * np.ptp(m.dataset.y))
    assert again.hyperparams == m.hyperparams


def test_width_checked(mlp_model):
    g, m = mlp_model
    with pytest.raises(WidthError):
        m.predict([ExtendedPoint((0.1,))])


def test_other_kernel_kinds_fit():
    g, ds = problem_data("backup_battery", 12, 3)
    m = fit(g, ds, kind=GD, search=SearchConfig(multistarts=2, max_evals=40))
    assert m.hyperparams.kind == GD
    assert np.isfinite(m.predict_one(make_point(g, dict(zip(g.nodes, ds.points[0].values))))[0])
