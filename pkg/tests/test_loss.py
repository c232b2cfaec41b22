import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_erm.data import make_synthetic
from adaptive_erm.loss import (
    DegenerateDataWarning,
    lipschitz_constant,
    logistic_grad,
    logistic_loss,
    loss_and_grad,
    smoothness_constant,
    softplus,
)

from conftest import dense_dataset, random_dataset


def central_diff(f, w):
    g = np.empty_like(w)
    for j in range(w.size):
        h = 1e-6 * (1.0 + abs(w[j]))
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def naive_loss(w, X, y):
    # direct formula, kept independent of the library path
    return sum(math.log1p(math.exp(-yi * float(xi @ w)))
               for xi, yi in zip(X, y)) / len(y)


def test_softplus_branches():
    assert softplus(0.0) == math.log(2.0)
    assert softplus(1000.0) == 1000.0
    assert softplus(-1000.0) == 0.0
    np.testing.assert_allclose(softplus(np.array([-3.0, 2.0])),
                               np.log1p(np.exp([-3.0, 2.0])), rtol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_loss_at_zero_is_log2(seed, rng):
    data = random_dataset(np.random.default_rng(seed), 37, 6)
    loss = logistic_loss(np.zeros(6), data)
    assert abs(loss - math.log(2.0)) <= math.ulp(math.log(2.0))


def test_loss_hand_value():
    data = dense_dataset([[1.0]], [1.0])
    # log(1 + e^{-log 3}) = log(4/3)
    assert logistic_loss(np.array([math.log(3.0)]), data) == pytest.approx(
        0.2876820724517809, rel=1e-15)


def test_loss_no_overflow():
    data = dense_dataset([[1.0]], [1.0])
    with np.errstate(over="raise", invalid="raise"):
        assert logistic_loss(np.array([-1000.0]), data) == pytest.approx(1000.0)


def test_loss_matches_naive_formula(rng):
    data = random_dataset(rng, 20, 5)
    w = rng.standard_normal(5)
    assert logistic_loss(w, data) == pytest.approx(
        naive_loss(w, data.X.toarray(), data.y), rel=1e-13)


def test_dimension_mismatch():
    data = dense_dataset([[1.0, 2.0]], [1.0])
    with pytest.raises(ValueError, match="shape"):
        logistic_loss(np.zeros(3), data)
    with pytest.raises(ValueError, match="shape"):
        logistic_grad(np.zeros(1), data)


def test_grad_hand_value():
    data = dense_dataset([[2.0, 0.0]], [-1.0])
    np.testing.assert_array_equal(logistic_grad(np.zeros(2), data), [1.0, 0.0])


def test_grad_symmetric_cancellation(rng):
    x = rng.standard_normal(4)
    data = dense_dataset([x, x], [1.0, -1.0])
    np.testing.assert_allclose(logistic_grad(np.zeros(4), data), 0.0, atol=1e-17)


def test_loss_and_grad_agree(rng):
    data = random_dataset(rng, 15, 4)
    w = rng.standard_normal(4)
    loss, g = loss_and_grad(w, data)
    assert loss == logistic_loss(w, data)
    np.testing.assert_array_equal(g, logistic_grad(w, data))


@pytest.mark.parametrize("seed", range(10))
def test_grad_finite_differences(seed):
    r = np.random.default_rng(seed)
    data = random_dataset(r, int(r.integers(1, 51)), int(r.integers(1, 21)))
    w = r.standard_normal(data.n_features)
    fd = central_diff(lambda v: logistic_loss(v, data), w)
    g = logistic_grad(w, data)
    assert np.max(np.abs(fd - g)) / max(np.max(np.abs(g)), 1e-12) <= 1e-6


def test_smoothness_single_sample():
    data = dense_dataset([[1.0]], [1.0])
    assert smoothness_constant(data) == pytest.approx(0.25 * 1.01, rel=1e-12)


def test_smoothness_duplicate_samples():
    one = dense_dataset([[1.0]], [1.0])
    two = dense_dataset([[1.0], [1.0]], [1.0, -1.0])
    assert smoothness_constant(two) == pytest.approx(smoothness_constant(one),
                                                     rel=1e-12)


def test_smoothness_zero_design_floor():
    data = dense_dataset([[0.0]], [1.0])
    with pytest.warns(DegenerateDataWarning):
        assert smoothness_constant(data) == 1e-12


def test_smoothness_against_dense_eigensolve(rng):
    data = random_dataset(rng, 60, 12)
    X = data.X.toarray()
    exact = np.linalg.eigvalsh(X.T @ X).max() / (4 * 60)
    L = smoothness_constant(data)
    assert exact <= L <= 1.01 * exact * (1 + 1e-5)


def test_lipschitz_constant():
    data = dense_dataset([[3.0, 4.0], [1.0, 0.0]], [1.0, -1.0])
    assert lipschitz_constant(data) == 5.0


weights = st.lists(st.floats(-5, 5), min_size=4, max_size=4).map(np.array)


@settings(max_examples=50, deadline=None)
@given(w1=weights, w2=weights, lam=st.floats(0, 1), seed=st.integers(0, 50))
def test_convexity(w1, w2, lam, seed):
    data = random_dataset(np.random.default_rng(seed), 12, 4)
    mix = logistic_loss(lam * w1 + (1 - lam) * w2, data)
    assert mix <= lam * logistic_loss(w1, data) + (1 - lam) * logistic_loss(
        w2, data) + 1e-12


@settings(max_examples=50, deadline=None)
@given(w1=weights, w2=weights, seed=st.integers(0, 50))
def test_first_order_convexity_and_smoothness(w1, w2, seed):
    data = random_dataset(np.random.default_rng(seed), 12, 4)
    lhs = logistic_loss(w2, data)
    assert lhs >= logistic_loss(w1, data) + logistic_grad(w1, data) @ (w2 - w1) - 1e-10
    L = smoothness_constant(data)
    dg = np.linalg.norm(logistic_grad(w1, data) - logistic_grad(w2, data))
    assert dg <= L * np.linalg.norm(w1 - w2) + 1e-15


def test_loss_nonnegative():
    data = make_synthetic(30, 3, seed=1)
    for scale in (0.0, 1.0, 100.0, 1e6):
        assert logistic_loss(np.full(3, scale), data) >= 0.0


def test_smoothness_overflow_rejected():
    data = dense_dataset([[1e200]], [1.0])
    with pytest.raises(ValueError, match="overflow"):
        smoothness_constant(data)
