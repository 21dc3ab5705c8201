"""Ridge and Bayesian ridge regression with an unpenalized intercept.

Both fits center ``X`` and ``y`` and leave the intercept out of the
penalty; ``intercept = mean(y) - mean(X, axis=0) @ W``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "FitError",
    "RidgeModel",
    "BayesianRidge",
    "ridge_closed_form",
    "ridge_loss",
    "fit_bayesian_ridge",
    "predict",
]


class FitError(ValueError):
    """Raised when a fit cannot proceed (degenerate targets, overflow)."""


@dataclass
class RidgeModel:
    W: np.ndarray
    intercept: float
    alpha_noise: float
    lambda_weights: float
    n_iters: int
    converged: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["W"] = [float(w) for w in self.W]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RidgeModel":
        d = dict(d)
        d["W"] = np.asarray(d["W"], dtype=float)
        return cls(**d)


def _dense(X):
    return X.toarray() if sp.issparse(X) else X


def _center(X, y):
    X_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - X_mean, y - y_mean, X_mean, y_mean


def ridge_loss(X, y, W, intercept=0.0, alpha=1.0) -> float:
    """``||y - X W - b||^2 + alpha ||W||^2``."""
    r = np.asarray(y) - np.asarray(X) @ np.asarray(W) - intercept
    return float(r @ r + alpha * np.dot(W, W))


def ridge_closed_form(X, y, alpha: float) -> tuple[np.ndarray, float]:
    """Minimize ``||y - X W - b||^2 + alpha ||W||^2`` by solving the normal equations.

    Returns ``(W, intercept)``. ``alpha`` must be strictly positive.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    X, y = check_X_y(_dense(X), y, dtype=float, y_numeric=True)
    Xc, yc, X_mean, y_mean = _center(X, y)
    d = X.shape[1]
    W = np.linalg.solve(Xc.T @ Xc + alpha * np.eye(d), Xc.T @ yc)
    return W, y_mean - float(X_mean @ W)


class BayesianRidge(RegressorMixin, BaseEstimator):
    """Ridge regression with evidence-maximized noise and weight precisions.

    Gaussian prior ``W ~ N(0, 1/lambda I)`` and noise ``N(0, 1/alpha)``.
    Each iteration computes the posterior mean under the current
    precisions, then re-estimates them with the effective number of
    well-determined parameters ``gamma``::

        gamma  = sum(alpha * e_i / (lambda + alpha * e_i))
        lambda = (gamma + 2 lambda_1) / (||W||^2 + 2 lambda_2)
        alpha  = (n - gamma + 2 alpha_1) / (||y - X W||^2 + 2 alpha_2)

    where ``e_i`` are the eigenvalues of the centered ``X^T X``. Iteration
    stops once ``max |W_new - W_old| < tol`` or after ``max_iter`` passes.

    Parameters
    ----------
    max_iter : int, default=300
    tol : float, default=1e-4
    alpha_1, alpha_2, lambda_1, lambda_2 : float, default=1e-6
        Gamma-prior shape and rate on the two precisions.
    alpha_init, lambda_init : float, optional
        Starting precisions; default ``1 / var(y)`` and ``1``.
    fit_hyperparams : bool, default=True
        When False the precisions stay at their initial values and the fit
        reduces to closed-form ridge with penalty ``lambda / alpha``.

    Attributes
    ----------
    coef_, intercept_ : fitted weights
    alpha_, lambda_ : precisions used for ``coef_``
    n_iter_ : int
    converged_ : bool
    alpha_path_ : list of float
        Noise precision after each update.
    """

    def __init__(self, max_iter=300, tol=1e-4, alpha_1=1e-6, alpha_2=1e-6,
                 lambda_1=1e-6, lambda_2=1e-6, alpha_init=None, lambda_init=None,
                 fit_hyperparams=True):
        self.max_iter = max_iter
        self.tol = tol
        self.alpha_1 = alpha_1
        self.alpha_2 = alpha_2
        self.lambda_1 = lambda_1
        self.lambda_2 = lambda_2
        self.alpha_init = alpha_init
        self.lambda_init = lambda_init
        self.fit_hyperparams = fit_hyperparams

    def fit(self, X, y):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        X, y = check_X_y(_dense(X), y, dtype=float, y_numeric=True)
        n, d = X.shape
        if n < 2:
            raise ValueError("need at least 2 samples")
        if np.ptp(y) == 0:
            raise FitError("degenerate targets: y has zero variance")
        Xc, yc, X_mean, y_mean = _center(X, y)

        U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        eig = s**2
        Uty = U.T @ yc

        alpha = 1.0 / np.var(y) if self.alpha_init is None else float(self.alpha_init)
        lam = 1.0 if self.lambda_init is None else float(self.lambda_init)

        def posterior_mean(alpha, lam):
            return Vt.T @ (s * Uty / (eig + lam / alpha))

        self.alpha_path_ = []
        coef_old = None
        converged = False
        it = 0
        for it in range(1, self.max_iter + 1):
            coef = posterior_mean(alpha, lam)
            if not np.all(np.isfinite(coef)):
                raise FitError(f"non-finite weights at iteration {it}")
            if not self.fit_hyperparams:
                converged = True
                break
            if coef_old is not None and np.max(np.abs(coef - coef_old)) < self.tol:
                converged = True
                break
            coef_old = coef
            rss = float(np.sum((yc - Xc @ coef) ** 2))
            gamma = float(np.sum(alpha * eig / (lam + alpha * eig)))
            lam = (gamma + 2 * self.lambda_1) / (float(coef @ coef) + 2 * self.lambda_2)
            alpha = (n - gamma + 2 * self.alpha_1) / (rss + 2 * self.alpha_2)
            if not (np.isfinite(lam) and np.isfinite(alpha) and lam > 0 and alpha > 0):
                raise FitError(f"non-finite precision at iteration {it}")
            self.alpha_path_.append(alpha)
        else:
            coef = posterior_mean(alpha, lam)

        self.coef_ = coef
        self.intercept_ = y_mean - float(X_mean @ coef)
        self.alpha_ = float(alpha)
        self.lambda_ = float(lam)
        self.n_iter_ = it
        self.converged_ = converged
        self.n_features_in_ = d
        self._Vt, self._s = Vt, s
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(_dense(X), dtype=float)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} features, model expects {self.coef_.shape[0]}"
            )
        return X @ self.coef_ + self.intercept_

    def posterior_covariance(self) -> np.ndarray:
        """``(alpha X^T X + lambda I)^-1`` on the centered design."""
        check_is_fitted(self, "coef_")
        d = self.coef_.shape[0]
        Vt, s = self._Vt, self._s
        lam, alpha = self.lambda_, self.alpha_
        # the orthogonal complement of the row space only sees the prior
        inner = Vt.T @ ((1.0 / (alpha * s**2 + lam) - 1.0 / lam)[:, None] * Vt)
        return inner + np.eye(d) / lam

    @property
    def model_(self) -> RidgeModel:
        check_is_fitted(self, "coef_")
        return RidgeModel(self.coef_, self.intercept_, self.alpha_, self.lambda_,
                          self.n_iter_, self.converged_)

    @classmethod
    def from_model(cls, model: RidgeModel, **params) -> "BayesianRidge":
        est = cls(**params)
        est.coef_ = np.asarray(model.W, dtype=float)
        est.intercept_ = float(model.intercept)
        est.alpha_ = float(model.alpha_noise)
        est.lambda_ = float(model.lambda_weights)
        est.n_iter_ = int(model.n_iters)
        est.converged_ = bool(model.converged)
        est.n_features_in_ = est.coef_.shape[0]
        return est


def fit_bayesian_ridge(X, y, max_iters: int = 300, tol: float = 1e-4, **params) -> RidgeModel:
    return BayesianRidge(max_iter=max_iters, tol=tol, **params).fit(X, y).model_


def predict(model, features):
    """``features @ W + intercept`` for a RidgeModel or fitted BayesianRidge.

    Accepts a single feature vector (returns a float) or a 2-D matrix.
    """
    if isinstance(model, BayesianRidge):
        model = model.model_
    x = np.asarray(_dense(features), dtype=float)
    W = np.asarray(model.W)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"feature dimension {x.shape[-1]} != model dimension {W.shape[0]}")
    out = x @ W + model.intercept
    return float(out) if x.ndim == 1 else out
