"""Goodness-of-fit metrics, k-fold cross-validation and residual histograms."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.base import clone

__all__ = [
    "EvalReport",
    "CVResult",
    "Histogram",
    "r2_score",
    "spearman_rho",
    "rmse",
    "evaluate",
    "kfold_indices",
    "cross_validate",
    "error_histogram",
    "histogram",
    "write_metrics_csv",
]


@dataclass
class EvalReport:
    """Single-fold fit quality. ``None`` marks an undefined metric."""

    r2: float | None
    spearman_rho: float | None
    rmse: float
    n: int
    residuals: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def row(self) -> dict:
        return {"r2": _fmt(self.r2), "spearman_rho": _fmt(self.spearman_rho),
                "rmse": _fmt(self.rmse), "n": self.n}

    def as_dict(self) -> dict:
        return {"r2": self.r2, "spearman_rho": self.spearman_rho, "rmse": self.rmse, "n": self.n}


def _fmt(v):
    return "undefined" if v is None else repr(float(v))


def r2_score(y_true, y_pred) -> float | None:
    """``1 - SS_res / SS_tot``; None when ``y_true`` is constant."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def _pearson(a, b) -> float | None:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return None
    return float(a @ b) / den


def spearman_rho(x, y) -> float | None:
    """Pearson correlation of average ranks; None if either side is constant."""
    return _pearson(rankdata(x), rankdata(y))


def rmse(y_true, y_pred) -> float:
    d = np.asarray(y_pred, dtype=float) - np.asarray(y_true, dtype=float)
    return math.sqrt(float(np.mean(d**2)))


def evaluate(y_true, y_pred) -> EvalReport:
    """R², Spearman rho and RMSE of predictions; residual = pred - true."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and of equal length")
    if y_true.size < 2:
        raise ValueError("need at least 2 pairs")
    return EvalReport(
        r2=r2_score(y_true, y_pred),
        spearman_rho=spearman_rho(y_true, y_pred),
        rmse=rmse(y_true, y_pred),
        n=int(y_true.size),
        residuals=y_pred - y_true,
    )


def _mean_defined(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class CVResult:
    """Fold-averaged metrics plus the pooled out-of-fold view."""

    per_fold: list[EvalReport]
    r2: float | None
    spearman_rho: float | None
    rmse: float
    pooled: EvalReport
    predictions: np.ndarray = field(repr=False)
    fold_of: np.ndarray = field(repr=False)

    @property
    def residuals(self) -> np.ndarray:
        return self.pooled.residuals


def kfold_indices(n: int, k: int = 6, seed: int = 0) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous split into ``k`` near-equal folds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} folds exceed n={n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def _take(X, idx):
    if isinstance(X, np.ndarray) or hasattr(X, "tocsr"):
        return X[idx]
    return [X[i] for i in idx]


def cross_validate(estimator, X, y, k: int = 6, seed: int = 0) -> CVResult:
    """K-fold CV of any estimator with ``fit``/``predict``.

    A fresh clone is fitted per fold, so fitted state such as a term
    vocabulary only ever sees training rows.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    folds = kfold_indices(n, k, seed)
    preds = np.empty(n)
    fold_of = np.empty(n, dtype=int)
    reports = []
    for f, test in enumerate(folds):
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != f]))
        test = np.sort(test)
        est = clone(estimator).fit(_take(X, train), y[train])
        p = np.asarray(est.predict(_take(X, test)), dtype=float)
        preds[test] = p
        fold_of[test] = f
        reports.append(evaluate(y[test], p))
    return CVResult(
        per_fold=reports,
        r2=_mean_defined(r.r2 for r in reports),
        spearman_rho=_mean_defined(r.spearman_rho for r in reports),
        rmse=float(np.mean([r.rmse for r in reports])),
        pooled=evaluate(y, preds),
        predictions=preds,
        fold_of=fold_of,
    )


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    sd: float

    def rows(self):
        return [(float(self.edges[i]), float(self.edges[i + 1]), int(self.counts[i]))
                for i in range(len(self.counts))]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_low", "bin_high", "count"])
            for lo, hi, c in self.rows():
                w.writerow([repr(lo), repr(hi), c])


def histogram(values, bins: int = 20, range: tuple[float, float] | None = None) -> Histogram:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("histogram needs at least one value")
    if range is None and v.min() == v.max():
        # a single bin centred on the repeated value
        edges = np.array([v[0] - 0.5, v[0] + 0.5])
        counts = np.array([v.size])
    else:
        counts, edges = np.histogram(v, bins=bins, range=range)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Histogram(edges, counts, float(v.mean()), sd)


def error_histogram(residuals, bins: int = 20) -> Histogram:
    """Histogram of prediction errors on a range symmetric about zero."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ValueError("error_histogram needs at least one residual")
    m = float(np.max(np.abs(r)))
    if m == 0.0:
        return histogram(r)
    return histogram(r, bins=bins, range=(-m, m))


def write_metrics_csv(result: CVResult | EvalReport, path) -> None:
    """Per-fold rows plus ``mean`` and ``pooled`` aggregate rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "n", "r2", "spearman_rho", "rmse"])
        if isinstance(result, EvalReport):
            row = result.row()
            w.writerow(["all", row["n"], row["r2"], row["spearman_rho"], row["rmse"]])
            return
        for i, rep in enumerate(result.per_fold):
            row = rep.row()
            w.writerow([i, row["n"], row["r2"], row["spearman_rho"], row["rmse"]])
        w.writerow(["mean", result.pooled.n, _fmt(result.r2), _fmt(result.spearman_rho),
                    _fmt(result.rmse)])
        row = result.pooled.row()
        w.writerow(["pooled", row["n"], row["r2"], row["spearman_rho"], row["rmse"]])
