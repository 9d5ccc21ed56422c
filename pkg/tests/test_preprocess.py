import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from webquality.core import DataError
from webquality.preprocess import (
    NormalizationModel,
    SmoteConfig,
    apply_normalizer,
    fit_normalizer,
    nearest_neighbors,
    smote_oversample,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
# values on a 1/8 grid keep the segment check well conditioned
grid = st.integers(-800, 800).map(lambda i: i / 8)


def test_fit_examples():
    m = fit_normalizer([[0], [5], [10]])
    assert m.mins == (0.0,) and m.maxs == (10.0,)
    one = fit_normalizer([[1.0, 2.0]])
    assert one.mins == one.maxs == (1.0, 2.0)
    with pytest.raises(DataError):
        fit_normalizer([[1.0], [1.0, 2.0]])
    with pytest.raises(DataError):
        fit_normalizer([])


def test_apply_examples():
    m = fit_normalizer([[0], [5], [10]])
    assert apply_normalizer(m, [5])[0] == 0.5
    assert apply_normalizer(m, [12])[0] == 1.0
    assert apply_normalizer(m, [-3])[0] == 0.0
    const = fit_normalizer([[4.0], [4.0]])
    assert apply_normalizer(const, [100.0])[0] == 0.0
    with pytest.raises(DataError):
        apply_normalizer(m, [1.0, 2.0])


def test_normalizer_round_trip():
    m = fit_normalizer([[0.1, -3.0], [0.7, 2.5]])
    assert NormalizationModel.loads(m.dumps()) == m


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)), elements=finite))
def test_normalizer_properties(X):
    m = fit_normalizer(X)
    out = apply_normalizer(m, X)
    assert ((out >= 0) & (out <= 1)).all()
    for j in range(X.shape[1]):
        if m.maxs[j] > m.mins[j]:
            assert out[X[:, j] == m.mins[j], j].min() == 0.0
            assert out[X[:, j] == m.maxs[j], j].max() == 1.0


def _on_segment(s, a, b, tol=1e-12):
    d = b - a
    if not d.any():
        return np.allclose(s, a, atol=tol)
    u = float(np.dot(s - a, d) / np.dot(d, d))
    return -tol <= u < 1 + tol and np.allclose(a + u * d, s, atol=1e-9)


def test_smote_two_points_diagonal():
    out = smote_oversample([[0.0, 0.0], [1.0, 1.0]], SmoteConfig(k_neighbors=1))
    assert out.shape == (2, 2)
    for s in out:
        assert s[0] == pytest.approx(s[1], abs=1e-15)
        assert 0.0 <= s[0] < 1.0


def test_smote_identical_points():
    out = smote_oversample([[2.0, 3.0]] * 4)
    assert (out == np.array([2.0, 3.0])).all()


def test_smote_percentage_200():
    out = smote_oversample([[0.0], [1.0], [3.0]], SmoteConfig(percentage=200))
    assert out.shape == (6, 1)


def test_smote_errors():
    with pytest.raises(DataError):
        smote_oversample([[1.0]])
    with pytest.raises(ValueError):
        SmoteConfig(k_neighbors=0)
    with pytest.raises(ValueError):
        SmoteConfig(percentage=150)


def test_nearest_neighbors_brute_force(rng):
    X = rng.integers(0, 4, size=(15, 2)).astype(float)  # plenty of distance ties
    nn = nearest_neighbors(X, 4)
    for i in range(len(X)):
        d = [(float(((X[j] - X[i]) ** 2).sum()), j) for j in range(len(X)) if j != i]
        assert list(nn[i]) == [j for _, j in sorted(d)[:4]]


@settings(max_examples=60)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 3)), elements=grid),
    st.integers(1, 6),
    st.sampled_from([100, 200, 300]),
    st.integers(0, 2**31),
)
def test_smote_properties(X, k, pct, seed):
    cfg = SmoteConfig(k, pct, seed)
    out = smote_oversample(X, cfg)
    assert out.shape == ((pct // 100) * len(X), X.shape[1])
    lo, hi = X.min(axis=0), X.max(axis=0)
    assert ((out >= lo - 1e-9) & (out <= hi + 1e-9)).all()
    assert out.tobytes() == smote_oversample(X, cfg).tobytes()
    # each synthetic comes from its own source row, in input order
    kk = min(k, len(X) - 1)
    nn = nearest_neighbors(X, kk)
    per = pct // 100
    for r, s in enumerate(out):
        i = r // per
        assert any(_on_segment(s, X[i], X[j]) for j in nn[i])
