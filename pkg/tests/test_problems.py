import math

import pytest

from hierdsg.configs import enumerate_discrete, hierarchical_names, sample_valid
from hierdsg.errors import InvalidPointError, UnknownProblemError
from hierdsg.graph import EXC
from hierdsg.points import ExtendedPoint, is_valid
from hierdsg.problems import evaluate, get_problem, list_problems


def test_catalog():
    assert len(list_problems()) == 9
    assert get_problem("mlp_flat") is get_problem("mlp")
    with pytest.raises(UnknownProblemError):
        get_problem("nope")


@pytest.mark.parametrize("name", list_problems())
def test_stored_counts(name):
    spec = get_problem(name)
    assert spec.n_configurations == len(enumerate_discrete(spec.graph))
    assert spec.n_hierarchical == len(enumerate_discrete(spec.graph, project=hierarchical_names(spec.graph)))


def test_documented_counts():
    assert get_problem("source_to_consumer").n_configurations == 8
    assert len(get_problem("source_to_consumer").graph.nodes) == 4
    assert get_problem("dragon_lite").n_hierarchical == 17
    g = get_problem("mlp").graph
    assert sum(not g.decl(n).is_continuous for n in g.design_names) == 6
    assert sum(g.decl(n).is_continuous for n in g.design_names) == 7


@pytest.mark.parametrize("name", list_problems())
def test_optimum_is_valid_and_best(name):
    spec = get_problem(name)
    assert is_valid(spec.graph, spec.optimum)
    assert evaluate(spec, spec.optimum) == pytest.approx(spec.optimum_value, abs=1e-12)
    values = [evaluate(spec, p) for p in sample_valid(spec.graph, 2000, 1)]
    assert min(values) >= spec.optimum_value - 1e-9


@pytest.mark.parametrize("name", list_problems())
def test_objective_finite_sweep(name):
    spec = get_problem(name)
    assert all(math.isfinite(evaluate(spec, p)) for p in sample_valid(spec.graph, 10_000, 2))


@pytest.mark.parametrize("name", list_problems())
def test_objective_ignores_excluded_bookkeeping(name):
    spec = get_problem(name)
    g = spec.graph
    for p in sample_valid(g, 50, 3):
        active = {n: v for n, v in p.as_dict(g).items() if v is not EXC}
        assert evaluate(spec, active) == evaluate(spec, p)


def test_evaluate_rejects_invalid_points():
    spec = get_problem("source_to_consumer")
    with pytest.raises(InvalidPointError):
        evaluate(spec, ExtendedPoint((1, 1, 1, 1)))


def test_pressure_order_is_strict():
    g = get_problem("pressure_order").graph
    for p in sample_valid(g, 2000, 4):
        d = p.as_dict(g)
        assert d["P_min"] < d["P_input"] < d["P_max"]


def test_hybrid_incompatibility():
    g = get_problem("hybrid_energy").graph
    for p in sample_valid(g, 2000, 5):
        d = p.as_dict(g)
        assert d["reserve_big"] is EXC or d["full_capacity"] is EXC
    assert not any(
        c[g.index("reserve_big")] is not EXC and c[g.index("full_capacity")] is not EXC
        for c in enumerate_discrete(g)
    )
