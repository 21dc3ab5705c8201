"""Perceived-anxiety scoring for microblog posts.

Rater labels are aggregated into per-tweet targets, a two-model Bayesian
ridge ensemble learns them from word-embedding means and n-gram counts, and
the trained model scores whole corpora for user-level analysis.
"""
__version__ = "0.1.0"

from .corpus import TweetRecord, filter_corpus, ingest, read_jsonl, write_jsonl
from .ensemble import AnxietyEnsemble, load_ensemble, save_ensemble
from .features import (
    EmbeddingMeanVectorizer,
    EmbeddingTable,
    OccurrenceVectorizer,
    embed_mean,
    load_embeddings,
    occurrence_vector,
    tokenize,
)
from .glm import PoissonGLM
from .labels import LabelObservation, aggregate_labels, icc_oneway, rater_score
from .lexicon import CategoryDictionary, LexiconScorer, load_dictionary
from .metrics import cross_validate, evaluate
from .regress import BayesianRidge, fit_bayesian_ridge, predict, ridge_closed_form
from .scorer import score_corpus
from .synth import SynthConfig, generate_synthetic

__all__ = [
    "AnxietyEnsemble",
    "BayesianRidge",
    "CategoryDictionary",
    "EmbeddingMeanVectorizer",
    "EmbeddingTable",
    "LabelObservation",
    "LexiconScorer",
    "OccurrenceVectorizer",
    "PoissonGLM",
    "SynthConfig",
    "TweetRecord",
    "aggregate_labels",
    "cross_validate",
    "embed_mean",
    "evaluate",
    "filter_corpus",
    "fit_bayesian_ridge",
    "generate_synthetic",
    "icc_oneway",
    "ingest",
    "load_dictionary",
    "load_embeddings",
    "load_ensemble",
    "occurrence_vector",
    "predict",
    "rater_score",
    "read_jsonl",
    "ridge_closed_form",
    "save_ensemble",
    "score_corpus",
    "tokenize",
    "write_jsonl",
]
