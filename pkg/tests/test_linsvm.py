import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from webquality.core import DataError
from webquality.linsvm import (
    SvmConfig,
    SvmModel,
    host_score_from_pages,
    primal_objective,
    svm_confidence,
    train_svm,
)

cp = pytest.importorskip("cvxpy")


def oracle_optimum(X, y, cost):
    w = cp.Variable(X.shape[1])
    b = cp.Variable()
    obj = 0.5 * cp.sum_squares(w) + cost * cp.sum(cp.pos(1 - cp.multiply(y, X @ w + b)))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def svm_fixtures(count, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, d = int(rng.integers(2, 21)), int(rng.integers(1, 4))
        X = rng.normal(size=(n, d)) * rng.choice([0.1, 1.0, 5.0])
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        y[0], y[1] = 1.0, -1.0
        cost = float(rng.choice([0.04, 0.5, 4.0, 80.0]))
        yield X, y, cost


def test_objective_matches_convex_oracle():
    worst = 0.0
    for X, y, cost in svm_fixtures(60):
        m = train_svm(X, y, SvmConfig(cost=cost))
        got = primal_objective(m.weights, m.intercept, X, y, cost)
        best = oracle_optimum(X, y, cost)
        worst = max(worst, (got - best) / max(abs(best), 1e-12))
    assert worst <= 1e-3


def test_dual_trace_is_monotone():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 3))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=40) > 0, 1.0, -1.0)
    trace = []
    train_svm(X, y, SvmConfig(cost=5.0), trace=trace)
    assert len(trace) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_symmetric_pair_example():
    m = train_svm([[-1.0], [1.0]], [-1.0, 1.0], SvmConfig(cost=100.0))
    assert m.weights[0] > 0
    assert m.weights[0] == pytest.approx(1.0, abs=1e-6)
    assert m.intercept == pytest.approx(0.0, abs=1e-6)
    assert m.margin([-1.0]) < 0 < m.margin([1.0])


@pytest.mark.parametrize("seed", range(10))
def test_separable_data_has_zero_training_error(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    direction = rng.normal(size=3)
    s = X @ direction
    X = X[np.abs(s) > 0.3]
    y = np.where(X @ direction > 0, 1.0, -1.0)
    m = train_svm(X, y, SvmConfig(cost=10.0))
    assert (np.sign(m.margins(X)) == y).all()


def test_duplicated_data_equals_doubled_cost():
    for X, y, cost in svm_fixtures(15, seed=4):
        dup = train_svm(np.vstack([X, X]), np.concatenate([y, y]), SvmConfig(cost=cost))
        best = oracle_optimum(X, y, 2 * cost)
        got = primal_objective(dup.weights, dup.intercept, X, y, 2 * cost)
        assert (got - best) / max(abs(best), 1e-12) <= 1e-3
        dbl = train_svm(X, y, SvmConfig(cost=2 * cost))
        assert np.allclose(dup.weights, dbl.weights, rtol=1e-2, atol=1e-2 * max(1.0, np.abs(dbl.weights).max()))


def test_training_errors():
    with pytest.raises(DataError):
        train_svm([[0.0], [1.0]], [1.0, 1.0])
    with pytest.raises(DataError):
        train_svm([[0.0], [1.0]], [1.0, 0.0])
    with pytest.raises(DataError):
        train_svm([[math.inf], [1.0]], [1.0, -1.0])
    with pytest.raises(ValueError):
        SvmConfig(cost=0.0)
    with pytest.raises(ValueError):
        SvmConfig(cost=-1.0)


def test_training_is_deterministic():
    X, y, cost = next(svm_fixtures(1, seed=9))
    assert train_svm(X, y, SvmConfig(cost=cost)) == train_svm(X.copy(), y.copy(), SvmConfig(cost=cost))


def test_confidence_examples():
    zero = SvmModel((0.0,), 0.0)
    p = svm_confidence(zero, [3.0])
    assert not p.positive and p.confidence == 0.5
    p = svm_confidence(SvmModel((1.0,), 0.0), [-2.0])
    assert not p.positive
    assert p.confidence == pytest.approx(0.8807970779778823, abs=1e-12)
    assert p.confidence == pytest.approx(0.88079, abs=1e-5)
    assert svm_confidence(SvmModel((1.0,), 0.0), [1e6]).confidence == pytest.approx(1.0)
    with pytest.raises(DataError):
        svm_confidence(zero, [1.0, 2.0])


def test_host_score_examples():
    p = host_score_from_pages([1.0, 1.0, 1.0])
    assert p.positive and p.confidence == svm_confidence(SvmModel((1.0,), 0.0), [1.0]).confidence
    p = host_score_from_pages([2.0, -2.0])
    assert not p.positive and p.confidence == 0.5
    assert host_score_from_pages([3.0]) == svm_confidence(SvmModel((1.0,), 0.0), [3.0])
    with pytest.raises(DataError):
        host_score_from_pages([])


@given(st.floats(-50, 50), st.floats(0, 50))
def test_confidence_symmetric_and_monotone(m, extra):
    unit = SvmModel((1.0,), 0.0)
    a = svm_confidence(unit, [m]).confidence
    assert a == svm_confidence(unit, [-m]).confidence
    bigger = abs(m) + extra
    assert svm_confidence(unit, [bigger]).confidence >= a
    assert 0.5 <= a <= 1.0


def test_persistence_round_trip():
    m = SvmModel((0.1, -2.5, 1e-300), 0.75)
    assert SvmModel.loads(m.dumps()) == m
