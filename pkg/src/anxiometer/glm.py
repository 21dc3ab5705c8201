"""Poisson regression with log link, fitted by iteratively reweighted least squares."""
from __future__ import annotations

import warnings

import numpy as np
from scipy import stats
from scipy.special import gammaln
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = ["PoissonGLM", "poisson_loglik", "SeparationWarning"]

_TINY = 1e-300


class SeparationWarning(RuntimeWarning):
    pass


def poisson_loglik(y, mu) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(np.sum(y * np.log(np.maximum(mu, _TINY)) - mu - gammaln(y + 1.0)))


class PoissonGLM(RegressorMixin, BaseEstimator):
    """``log E[y] = b0 + X b`` for nonnegative counts ``y``.

    Each IRLS step solves the weighted least-squares problem with working
    response ``z = eta + (y - mu) / mu`` and weights ``mu``; this is Newton's
    method on the Poisson log-likelihood, so convergence is quadratic near
    the optimum. Iteration stops when no coefficient moves by more than
    ``tol * (1 + |b|)``; one more step is then taken to polish the score
    equations.

    Parameters
    ----------
    max_iter : int, default=100
    tol : float, default=1e-10
    robust : bool, default=False
        Use the sandwich (HC0) covariance instead of the inverse Fisher
        information for standard errors.

    Attributes
    ----------
    coef_ : ndarray, slopes
    intercept_ : float
    params_ : ndarray, ``[intercept, *coef_]``
    bse_, zvalues_, pvalues_ : ndarray aligned with ``params_``
    llf_, llnull_ : float, fitted and intercept-only log-likelihoods
    pseudo_r2_ : float, McFadden ``1 - llf / llnull``
    converged_ : bool
    n_iter_ : int
    """

    def __init__(self, max_iter=100, tol=1e-10, robust=False):
        self.max_iter = max_iter
        self.tol = tol
        self.robust = robust

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True, ensure_min_features=0)
        if np.any(y < 0):
            raise ValueError("Poisson outcome must be nonnegative")
        n = X.shape[0]
        A = np.column_stack([np.ones(n), X])
        ybar = float(y.mean())
        if ybar == 0:
            raise ValueError("all-zero outcome; Poisson likelihood has no maximum")
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise ValueError("design matrix is rank deficient (constant or collinear regressor)")

        mu = (y + ybar) / 2.0
        eta = np.log(mu)
        beta = np.zeros(A.shape[1])
        converged = False
        polish = False
        it = 0
        for it in range(1, self.max_iter + 1):
            w = mu
            z = eta + (y - mu) / mu
            Aw = A * w[:, None]
            beta_new = np.linalg.solve(A.T @ Aw, Aw.T @ z)
            step = np.max(np.abs(beta_new - beta) / (1.0 + np.abs(beta_new)))
            beta = beta_new
            eta = A @ beta
            with np.errstate(over="ignore", under="ignore"):
                mu = np.exp(eta)
            if not np.all(np.isfinite(mu)):
                raise FloatingPointError(f"mean overflow at IRLS iteration {it}")
            if np.any(mu < _TINY):
                warnings.warn("fitted mean underflow; possible perfect separation",
                              SeparationWarning, stacklevel=2)
                mu = np.maximum(mu, _TINY)
            if polish:
                converged = True
                break
            if step < self.tol:
                polish = True

        if X.shape[1] == 0:
            # intercept-only: the MLE is exactly the sample mean
            mu = np.full(n, ybar)
            beta = np.array([np.log(ybar)])
        info = A.T @ (A * mu[:, None])
        info_inv = np.linalg.inv(info)
        if self.robust:
            r = y - mu
            meat = A.T @ (A * (r**2)[:, None])
            cov = info_inv @ meat @ info_inv
        else:
            cov = info_inv
        self.params_ = beta
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:].copy()
        self.cov_params_ = cov
        self.bse_ = np.sqrt(np.diag(cov))
        self.zvalues_ = beta / self.bse_
        self.pvalues_ = 2.0 * stats.norm.sf(np.abs(self.zvalues_))
        self.llf_ = poisson_loglik(y, mu)
        self.llnull_ = poisson_loglik(y, np.full(n, ybar))
        self.pseudo_r2_ = 1.0 - self.llf_ / self.llnull_ if self.llnull_ != 0 else 0.0
        self.score_ = A.T @ (y - mu)
        self.converged_ = converged
        self.n_iter_ = it
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float, ensure_min_features=0)
        return np.exp(self.intercept_ + X @ self.coef_)

    def conf_int(self, level: float = 0.95) -> np.ndarray:
        check_is_fitted(self, "params_")
        q = stats.norm.ppf(0.5 + level / 2.0)
        return np.column_stack([self.params_ - q * self.bse_, self.params_ + q * self.bse_])
