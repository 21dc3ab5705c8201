"""Two-model text regressor: embedding-mean and occurrence-count Bayesian ridges.

The ensemble prediction for a tweet is the mean of both sub-model scores.
"""
from __future__ import annotations

import json
import os

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .features import (
    EmbeddingMeanVectorizer,
    EmbeddingTable,
    OccurrenceVectorizer,
    embed_mean,
    occurrence_vector,
    tokenize,
)
from .regress import BayesianRidge, RidgeModel

__all__ = [
    "ARTIFACT_FORMAT",
    "ARTIFACT_VERSION",
    "ChecksumMismatch",
    "AnxietyEnsemble",
    "predict_ensemble",
    "save_ensemble",
    "load_ensemble",
]

ARTIFACT_FORMAT = "anxiometer.ensemble"
ARTIFACT_VERSION = 1


class ChecksumMismatch(ValueError):
    """The embedding table differs from the one the model was trained with."""


class AnxietyEnsemble(RegressorMixin, BaseEstimator):
    """Fit on raw tweet texts, predict a perceived-anxiety score per text.

    Parameters
    ----------
    table : EmbeddingTable
    max_iter, tol : passed to both BayesianRidge sub-models.
    max_features : int, optional
        Cap on the occurrence vocabulary (most document-frequent terms).
    """

    def __init__(self, table: EmbeddingTable | None = None, max_iter=300, tol=1e-4,
                 max_features=None):
        self.table = table
        self.max_iter = max_iter
        self.tol = tol
        self.max_features = max_features

    def __sklearn_clone__(self):
        # share the (immutable) table between clones instead of deep-copying it
        return type(self)(**self.get_params(deep=False))

    def fit(self, X, y):
        texts = list(X)
        y = np.asarray(y, dtype=float)
        if len(texts) != len(y):
            raise ValueError("texts and targets differ in length")
        self.embed_vectorizer_ = EmbeddingMeanVectorizer(self.table).fit(texts)
        self.occurrence_vectorizer_ = OccurrenceVectorizer(max_features=self.max_features).fit(texts)
        E = self.embed_vectorizer_.transform(texts)
        O = self.occurrence_vectorizer_.transform(texts).toarray()
        self.model_embed_ = BayesianRidge(max_iter=self.max_iter, tol=self.tol).fit(E, y)
        self.model_occur_ = BayesianRidge(max_iter=self.max_iter, tol=self.tol).fit(O, y)
        self.embedding_checksum_ = self.table.checksum
        self._index_weights()
        return self

    def _index_weights(self):
        vocab = self.occurrence_vectorizer_.vocabulary_
        coef = self.model_occur_.coef_
        self.term_weights_ = {t: float(coef[j]) for t, j in vocab.items()}

    @property
    def vocabulary_(self) -> dict[str, int]:
        return self.occurrence_vectorizer_.vocabulary_

    def score_parts(self, text: str) -> tuple[float, float]:
        """Sub-model predictions ``(embedding, occurrence)`` for one text."""
        toks = tokenize(text)
        e = embed_mean(toks, self.table)
        p_embed = float(np.dot(e, self.model_embed_.coef_)) + self.model_embed_.intercept_
        w = self.term_weights_
        acc = 0.0
        for term, count in occurrence_vector(toks).items():
            weight = w.get(term)
            if weight is not None:
                acc += count * weight
        return p_embed, acc + self.model_occur_.intercept_

    def score_text(self, text: str) -> float:
        a, b = self.score_parts(text)
        return (a + b) / 2.0

    def predict(self, X):
        check_is_fitted(self, "term_weights_")
        return np.array([self.score_text(t) for t in X], dtype=float)

    def to_dict(self) -> dict:
        check_is_fitted(self, "term_weights_")
        vocab = self.vocabulary_
        terms = sorted(vocab, key=vocab.get)
        return {
            "format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "embedding": {"checksum": self.embedding_checksum_,
                          "dimension": self.table.dimension},
            "params": {"max_iter": self.max_iter, "tol": self.tol,
                       "max_features": self.max_features},
            "model_embed": self.model_embed_.model_.to_dict(),
            "model_occur": self.model_occur_.model_.to_dict(),
            "terms": terms,
        }

    @classmethod
    def from_dict(cls, doc: dict, table: EmbeddingTable, verify_checksum: bool = True):
        if doc.get("format") != ARTIFACT_FORMAT:
            raise ValueError("not an anxiometer model artifact")
        if doc.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported artifact version {doc.get('version')!r}")
        emb = doc["embedding"]
        if verify_checksum and emb["checksum"] != table.checksum:
            raise ChecksumMismatch(
                f"embedding checksum {table.checksum} does not match model ({emb['checksum']})"
            )
        if emb["dimension"] != table.dimension:
            raise ChecksumMismatch("embedding dimension does not match model")
        ens = cls(table=table, **doc["params"])
        vocab = {t: i for i, t in enumerate(doc["terms"])}
        ens.embed_vectorizer_ = EmbeddingMeanVectorizer(table).fit(None)
        ens.occurrence_vectorizer_ = OccurrenceVectorizer(vocabulary=vocab).fit(None)
        ens.model_embed_ = BayesianRidge.from_model(RidgeModel.from_dict(doc["model_embed"]))
        ens.model_occur_ = BayesianRidge.from_model(RidgeModel.from_dict(doc["model_occur"]))
        ens.embedding_checksum_ = table.checksum
        ens._index_weights()
        return ens


def predict_ensemble(ensemble: AnxietyEnsemble, text: str) -> float:
    return ensemble.score_text(text)


def save_ensemble(ensemble: AnxietyEnsemble, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(ensemble.to_dict(), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_ensemble(path: str | os.PathLike, table: EmbeddingTable, verify_checksum: bool = True):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return AnxietyEnsemble.from_dict(doc, table, verify_checksum=verify_checksum)
