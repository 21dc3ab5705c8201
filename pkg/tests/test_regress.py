import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from anxiometer.regress import (
    BayesianRidge,
    FitError,
    RidgeModel,
    fit_bayesian_ridge,
    predict,
    ridge_closed_form,
    ridge_loss,
)

from oracles import ridge_grid

FIX_X = np.array([[1.0, 2.0], [2.0, 0.5], [3.0, 1.0], [0.5, 3.0]])
FIX_Y = np.array([2.0, 1.5, 3.5, 1.0])


def test_identity_design_small_alpha():
    y = np.array([1.0, 4.0, 2.0])
    W, b = ridge_closed_form(np.eye(3), y, 1e-12)
    # centered identity is rank deficient, so compare fitted values
    assert np.allclose(np.eye(3) @ W + b, y, atol=1e-6)


def test_huge_alpha_shrinks_to_mean():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(20, 3)), rng.normal(size=20) + 2
    W, b = ridge_closed_form(X, y, 1e12)
    assert np.linalg.norm(W) < 1e-6 and b == pytest.approx(y.mean(), abs=1e-6)


def test_alpha_must_be_positive():
    with pytest.raises(ValueError):
        ridge_closed_form(FIX_X, FIX_Y, 0.0)


def test_closed_form_matches_grid():
    W, _ = ridge_closed_form(FIX_X, FIX_Y, 1.0)
    assert np.max(np.abs(W - ridge_grid(FIX_X, FIX_Y, 1.0))) <= 2e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_loss_optimality_under_perturbation(seed, alpha):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(15, 3)), rng.normal(size=15)
    W, b = ridge_closed_form(X, y, alpha)
    base = ridge_loss(X, y, W, b, alpha)
    for j in range(3):
        for s in (-1e-3, 1e-3):
            Wp = W.copy()
            Wp[j] += s
            bp = float(np.mean(y - X @ Wp))
            assert ridge_loss(X, y, Wp, bp, alpha) >= base - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_frozen_bayes_equals_closed_form(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(50, 10)), rng.normal(size=50)
    a, lam = rng.uniform(0.1, 10), rng.uniform(0.1, 10)
    m = fit_bayesian_ridge(X, y, alpha_init=a, lambda_init=lam, fit_hyperparams=False)
    W, b = ridge_closed_form(X, y, m.lambda_weights / m.alpha_noise)
    assert np.max(np.abs(m.W - W)) <= 1e-8 and abs(m.intercept - b) <= 1e-8


def test_exact_fit_recovers_least_squares():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 3))
    w = np.array([1.0, -2.0, 0.5])
    y = X @ w + 2.0
    est = BayesianRidge(max_iter=300, tol=1e-10).fit(X, y)
    assert np.max(np.abs(est.coef_ - w)) < 1e-6
    tail = est.alpha_path_[-5:]
    assert all(b >= a for a, b in zip(tail, tail[1:]))
    assert abs(predict(est.model_, X[0]) - y[0]) < 1e-6


def test_bayes_noisy_fit_reasonable():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 4))
    y = X @ np.array([0.5, 0, -0.5, 1]) + 3 + rng.normal(scale=0.5, size=400)
    est = BayesianRidge().fit(X, y)
    assert est.converged_ and est.alpha_ == pytest.approx(4.0, rel=0.2)
    cov = est.posterior_covariance()
    direct = np.linalg.inv(est.alpha_ * (X - X.mean(0)).T @ (X - X.mean(0)) + est.lambda_ * np.eye(4))
    assert np.allclose(cov, direct)
    assert np.allclose(est.predict(sp.csr_matrix(X)), est.predict(X))


def test_degenerate_targets():
    with pytest.raises(FitError, match="degenerate targets"):
        fit_bayesian_ridge(FIX_X, np.ones(4))


@pytest.mark.parametrize("kw", [{"max_iters": 0}, {"tol": 0.0}])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        fit_bayesian_ridge(FIX_X, FIX_Y, **kw)


def test_predict_arithmetic_and_errors():
    m = RidgeModel(np.array([1.0, -1.0]), 0.0, 1.0, 1.0, 1, True)
    assert predict(m, [2.0, 0.5]) == 1.5
    assert predict(RidgeModel(np.array([1.0, 2.0]), 2.5, 1, 1, 1, True), np.zeros(2)) == 2.5
    with pytest.raises(ValueError):
        predict(m, [1.0, 2.0, 3.0])
    assert RidgeModel.from_dict(m.to_dict()).W.tolist() == [1.0, -1.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prediction_is_affine(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(20, 3)), rng.normal(size=20)
    m = fit_bayesian_ridge(X, y)
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert predict(m, (a + b) / 2) == pytest.approx((predict(m, a) + predict(m, b)) / 2, abs=1e-12)


def test_estimator_api():
    est = BayesianRidge(tol=1e-3)
    assert clone(est).get_params()["tol"] == 1e-3
    est.fit(FIX_X, FIX_Y)
    assert BayesianRidge.from_model(est.model_).predict(FIX_X).tolist() == est.predict(FIX_X).tolist()
