"""Tweet text to feature vectors.

Two representations are produced per tweet: the mean of the pretrained
word vectors of its tokens, and a sparse count vector over unigram and
bigram terms (words and emoji alike).
"""
from __future__ import annotations

import hashlib
import os
import string
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import regex
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "BIGRAM_SEP",
    "Token",
    "EmbeddingTable",
    "FeaturePair",
    "tokenize",
    "occurrence_vector",
    "embed_mean",
    "load_embeddings",
    "parse_embeddings",
    "vectorize_corpus",
    "write_term_index",
    "EmbeddingMeanVectorizer",
    "OccurrenceVectorizer",
]

# reserved: stripped from every token, so flattened bigram keys never collide
BIGRAM_SEP = "▸"

_GRAPHEME = regex.compile(r"\X")
_EMOJI = regex.compile(r"[\p{Extended_Pictographic}\p{Regional_Indicator}⃣]")
_PUNCT = string.punctuation
_URL_PREFIXES = ("http://", "https://", "www.")


@dataclass(frozen=True)
class Token:
    surface: str
    kind: str  # "word" or "emoji"

    def __str__(self) -> str:
        return self.surface


def _is_emoji(grapheme: str) -> bool:
    return _EMOJI.search(grapheme) is not None


def _emit_word(buf: list[str], out: list[Token]) -> None:
    if not buf:
        return
    word = "".join(buf).strip(_PUNCT).replace(BIGRAM_SEP, "").casefold()
    buf.clear()
    if word:
        out.append(Token(word, "word"))


def tokenize(text: str) -> list[Token]:
    """Split a tweet into case-folded word tokens and emoji tokens.

    Rules, applied per whitespace-separated chunk after NFC normalization:
    URLs and @-mentions are dropped; each emoji grapheme cluster becomes
    its own token even when glued to a word; the remaining runs are
    stripped of leading/trailing ASCII punctuation (so ``#monday`` yields
    ``monday``) and case-folded.

    >>> [t.surface for t in tokenize("Feeling GREAT!!! https://t.co/x @bob #monday")]
    ['feeling', 'great', 'monday']
    """
    if text is None:
        raise TypeError("text must not be None")
    out: list[Token] = []
    for chunk in unicodedata.normalize("NFC", text).split():
        head = chunk.lstrip("\"'([{<")
        low = head.lower()
        if head.startswith("@") or low.startswith(_URL_PREFIXES):
            continue
        buf: list[str] = []
        for g in _GRAPHEME.findall(chunk):
            if _is_emoji(g):
                _emit_word(buf, out)
                out.append(Token(g, "emoji"))
            else:
                buf.append(g)
        _emit_word(buf, out)
    return out


def _surfaces(tokens) -> list[str]:
    return [t.surface if isinstance(t, Token) else t for t in tokens]


def occurrence_vector(tokens: Sequence[Token | str]) -> Counter:
    """Unigram and adjacent-pair counts; bigram keys are ``a▸b``.

    >>> dict(occurrence_vector(["a", "a", "a", "a"]))
    {'a': 4, 'a▸a': 3}
    """
    words = _surfaces(tokens)
    counts = Counter(words)
    counts.update(a + BIGRAM_SEP + b for a, b in zip(words, words[1:]))
    return counts


class EmbeddingTable:
    """Read-only token -> vector map with a fixed dimension."""

    def __init__(self, vocabulary: Mapping[str, int], vectors: np.ndarray,
                 checksum: str | None = None, rejected: Sequence[tuple[int, str]] = ()):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] == 0:
            raise ValueError("vectors must be a non-empty 2-D array")
        if len(vocabulary) != vectors.shape[0]:
            raise ValueError("vocabulary and vector rows disagree")
        vectors.setflags(write=False)
        self.vocabulary = dict(vocabulary)
        self.vectors = vectors
        self.checksum = checksum
        self.rejected = list(rejected)

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Sequence[float]]) -> "EmbeddingTable":
        tokens = list(mapping)
        rows = [np.asarray(mapping[t], dtype=float) for t in tokens]
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise ValueError("inconsistent vector dimensions")
        vectors = np.vstack(rows)
        h = hashlib.sha256()
        for t, r in zip(tokens, vectors):
            h.update(t.encode("utf-8"))
            h.update(r.tobytes())
        return cls({t: i for i, t in enumerate(tokens)}, vectors, checksum=h.hexdigest())

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocabulary)

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.vocabulary[token]]

    def __repr__(self) -> str:
        return f"EmbeddingTable(n={len(self)}, dimension={self.dimension})"


def load_embeddings(path) -> EmbeddingTable:
    """Load a GloVe-style text file, ``token v1 ... vD`` per line.

    The dimension is taken from the first line. Lines of another arity or
    with non-numeric values are skipped and listed in ``table.rejected``
    as ``(line_number, reason)``; repeated tokens keep their first vector.
    The returned table carries the SHA-256 of the file bytes. ``path`` may
    also be a binary file object.
    """
    if hasattr(path, "read"):
        return parse_embeddings(path, name=getattr(path, "name", "<stream>"))
    with open(path, "rb") as fh:
        return parse_embeddings(fh, name=os.fspath(path))


def parse_embeddings(lines: Iterable[bytes], name: str = "<embeddings>") -> EmbeddingTable:
    h = hashlib.sha256()
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    rejected: list[tuple[int, str]] = []
    dim = None
    for lineno, raw in enumerate(lines, start=1):
        h.update(raw)
        line = raw.decode("utf-8").rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.rstrip(" ").split(" ")
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise ValueError(f"{name}: first line has no vector values")
        if len(parts) != dim + 1:
            rejected.append((lineno, f"expected {dim} values, got {len(parts) - 1}"))
            continue
        try:
            vec = np.array(parts[1:], dtype=float)
        except ValueError:
            rejected.append((lineno, "non-numeric value"))
            continue
        if not np.all(np.isfinite(vec)):
            rejected.append((lineno, "non-finite value"))
            continue
        token = parts[0]
        if token in vocab:
            rejected.append((lineno, "duplicate token"))
            continue
        vocab[token] = len(rows)
        rows.append(vec)
    if not rows:
        raise ValueError(f"{name}: no embedding vectors found")
    return EmbeddingTable(vocab, np.vstack(rows), checksum=h.hexdigest(), rejected=rejected)


def embed_mean(tokens: Sequence[Token | str], table: EmbeddingTable, return_oov: bool = False):
    """Componentwise mean of the vectors of in-table tokens.

    Tokens missing from the table are skipped; when none hit, the zero
    vector is returned. With ``return_oov`` the miss count comes back too.
    """
    rows = []
    oov = 0
    vocab = table.vocabulary
    for s in _surfaces(tokens):
        idx = vocab.get(s)
        if idx is None:
            oov += 1
        else:
            rows.append(idx)
    if rows:
        vec = table.vectors[rows].mean(axis=0)
    else:
        vec = np.zeros(table.dimension)
    return (vec, oov) if return_oov else vec


@dataclass
class FeaturePair:
    embed_mean: np.ndarray
    occurrence: Counter = field(default_factory=Counter)
    oov_count: int = 0


def build_term_index(occurrences: Iterable[Mapping[str, int]], max_features: int | None = None) -> dict[str, int]:
    """Lexicographic term -> column map.

    With ``max_features`` only the terms with the highest document frequency
    are kept (ties broken lexicographically) before indexing.
    """
    df: Counter = Counter()
    for occ in occurrences:
        df.update(occ.keys())
    terms = sorted(df)
    if max_features is not None and len(terms) > max_features:
        ranked = sorted(terms, key=lambda t: (-df[t], t))[:max_features]
        terms = sorted(ranked)
    return {t: i for i, t in enumerate(terms)}


def vectorize_corpus(texts: Iterable[str], table: EmbeddingTable,
                     vocab: Mapping[str, int] | None = None) -> tuple[list[FeaturePair], dict[str, int]]:
    """Featurize every text; build the term index unless ``vocab`` is given.

    In scoring mode (``vocab`` supplied) terms outside the index are dropped.
    """
    pairs = []
    for text in texts:
        toks = tokenize(text)
        vec, oov = embed_mean(toks, table, return_oov=True)
        pairs.append(FeaturePair(vec, occurrence_vector(toks), oov))
    if vocab is None:
        vocab = build_term_index(p.occurrence for p in pairs)
    else:
        vocab = dict(vocab)
        for p in pairs:
            p.occurrence = Counter({t: c for t, c in p.occurrence.items() if t in vocab})
    return pairs, vocab


def occurrence_matrix(occurrences: Sequence[Mapping[str, int]], vocab: Mapping[str, int]) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for occ in occurrences:
        cols = sorted((vocab[t], c) for t, c in occ.items() if t in vocab)
        indices.extend(c for c, _ in cols)
        data.extend(float(v) for _, v in cols)
        indptr.append(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(occurrences), len(vocab)))


def write_term_index(vocab: Mapping[str, int], path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["term", "column"])
        for term, col in sorted(vocab.items(), key=lambda kv: kv[1]):
            w.writerow([term, col])


class EmbeddingMeanVectorizer(TransformerMixin, BaseEstimator):
    """Texts -> dense (n, dimension) matrix of mean word vectors.

    Parameters
    ----------
    table : EmbeddingTable
        Pretrained vectors; shared, never copied or modified.
    """

    def __init__(self, table: EmbeddingTable | None = None):
        self.table = table

    def fit(self, X, y=None):
        if self.table is None:
            raise ValueError("EmbeddingMeanVectorizer needs an embedding table")
        self.n_features_out_ = self.table.dimension
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        out = np.empty((len(X), self.n_features_out_))
        for i, text in enumerate(X):
            out[i] = embed_mean(tokenize(text), self.table)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array([f"embed{i}" for i in range(self.n_features_out_)], dtype=object)


class OccurrenceVectorizer(TransformerMixin, BaseEstimator):
    """Texts -> sparse unigram+bigram count matrix.

    Parameters
    ----------
    vocabulary : mapping, optional
        Fixed term -> column index. When omitted, ``fit`` builds one from
        the training texts in lexicographic order.
    max_features : int, optional
        Keep only the most document-frequent terms when building.
    """

    def __init__(self, vocabulary: Mapping[str, int] | None = None, max_features: int | None = None):
        self.vocabulary = vocabulary
        self.max_features = max_features

    def fit(self, X, y=None):
        if self.vocabulary is not None:
            self.vocabulary_ = dict(self.vocabulary)
        else:
            self.vocabulary_ = build_term_index(
                (occurrence_vector(tokenize(t)) for t in X), self.max_features
            )
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return occurrence_matrix([occurrence_vector(tokenize(t)) for t in X], self.vocabulary_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(sorted(self.vocabulary_, key=self.vocabulary_.get), dtype=object)
