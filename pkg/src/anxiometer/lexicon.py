"""Dictionary word-count baseline (LIWC-style categories).

Only the file format and the scoring rules live here; the word lists are
supplied by the user. Two layouts are read:

* the ``.dic`` layout: a ``%``-delimited header of ``id<TAB>name`` lines,
  then ``entry<TAB>id id ...`` lines;
* a two-column CSV ``entry,category``.

An entry ending in ``*`` is a root and matches every token with that
prefix.
"""
from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .features import Token, tokenize
from .metrics import EvalReport, evaluate

__all__ = [
    "CategoryDictionary",
    "LexiconScore",
    "LexiconScorer",
    "BaselineResult",
    "load_dictionary",
    "category_fractions",
    "sentiment_score",
    "score_text",
    "baseline_evaluate",
    "write_scatter",
]


@dataclass
class _Category:
    words: set[str] = field(default_factory=set)
    roots: tuple[str, ...] = ()

    def add_root(self, root: str) -> None:
        if root not in self.roots:
            self.roots = tuple(sorted(self.roots + (root,)))

    def matches(self, token: str) -> bool:
        return token in self.words or (bool(self.roots) and token.startswith(self.roots))


class CategoryDictionary:
    """Category name -> exact words and word roots, all case-folded."""

    def __init__(self, entries: Mapping[str, Iterable[str]] | None = None):
        self._cats: dict[str, _Category] = {}
        self.rejected: list[tuple[int, str]] = []
        for name, items in (entries or {}).items():
            self.add_category(name)
            for e in items:
                self.add(e, name)

    def add_category(self, name: str) -> None:
        self._cats.setdefault(name, _Category())

    def add(self, entry: str, category: str) -> None:
        e = entry.strip().casefold()
        if not e:
            raise ValueError("empty entry")
        cat = self._cats.setdefault(category, _Category())
        if e.endswith("*"):
            root = e.rstrip("*")
            if not root:
                raise ValueError(f"empty root in entry {entry!r}")
            cat.add_root(root)
        else:
            cat.words.add(e)

    @property
    def categories(self) -> list[str]:
        return list(self._cats)

    def entries(self, category: str) -> set[str]:
        c = self._cats[category]
        return set(c.words) | {r + "*" for r in c.roots}

    def resolve(self, name: str) -> str | None:
        """Case-insensitive category lookup (``ANX`` finds ``anx``)."""
        if name in self._cats:
            return name
        low = name.casefold()
        for cat in self._cats:
            if cat.casefold() == low:
                return cat
        return None

    def matches(self, token: str, category: str) -> bool:
        return self._cats[category].matches(token)

    def swapped(self, a: str, b: str) -> "CategoryDictionary":
        """Copy with the entry sets of categories ``a`` and ``b`` exchanged."""
        out = CategoryDictionary()
        for name in self._cats:
            src = {a: b, b: a}.get(name, name)
            out.add_category(name)
            for e in self.entries(src):
                out.add(e, name)
        return out

    def __len__(self) -> int:
        return len(self._cats)

    def __repr__(self) -> str:
        sizes = {k: len(v.words) + len(v.roots) for k, v in self._cats.items()}
        return f"CategoryDictionary({sizes})"


def _load_csv(path) -> CategoryDictionary:
    d = CategoryDictionary()
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["entry", "category"]:
                continue
            if len(row) != 2 or not row[1].strip():
                d.rejected.append((lineno, "expected entry,category"))
                continue
            try:
                d.add(row[0], row[1].strip())
            except ValueError as exc:
                d.rejected.append((lineno, str(exc)))
    return d


def _load_dic(lines: Sequence[str]) -> CategoryDictionary:
    d = CategoryDictionary()
    ids: dict[str, str] = {}
    i = 0
    # header: %, id<TAB>name lines, %
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i < len(lines) and lines[i].strip() == "%":
        i += 1
        while i < len(lines) and lines[i].strip() != "%":
            parts = lines[i].split()
            if len(parts) >= 2:
                ids[parts[0]] = parts[1]
                d.add_category(parts[1])
            elif parts:
                d.rejected.append((i + 1, "malformed category line"))
            i += 1
        i += 1
    for lineno in range(i, len(lines)):
        parts = lines[lineno].rstrip("\r\n").split("\t")
        if len(parts) == 1:
            parts = parts[0].split()
        parts = [p for p in (x.strip() for x in parts) if p]
        if not parts:
            continue
        entry, cat_ids = parts[0], parts[1:]
        unknown = [c for c in cat_ids if c not in ids]
        if not cat_ids or unknown:
            d.rejected.append((lineno + 1, f"unknown category id {unknown[0]}" if unknown
                               else "entry without category"))
            continue
        try:
            for c in cat_ids:
                d.add(entry, ids[c])
        except ValueError as exc:
            d.rejected.append((lineno + 1, str(exc)))
    return d


def load_dictionary(path: str | os.PathLike) -> CategoryDictionary:
    """Read a ``.dic`` or ``entry,category`` CSV dictionary.

    Bad lines are skipped and recorded in ``rejected`` as
    ``(line_number, reason)``. A dictionary without categories loads but
    emits a warning.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    first = next((ln.strip() for ln in lines if ln.strip()), "")
    if first == "%":
        d = _load_dic(lines)
    else:
        d = _load_csv(path)
    if len(d) == 0:
        warnings.warn(f"{os.fspath(path)}: dictionary has no categories", stacklevel=2)
    return d


@dataclass(frozen=True)
class LexiconScore:
    anx_fraction: float
    posemo_fraction: float
    negemo_fraction: float
    raw_sentiment: float
    normalized_sentiment: float


def category_fractions(tokens: Sequence[Token | str], dictionary: CategoryDictionary) -> dict[str, float]:
    """Share of tokens matching each category; emoji tokens never match."""
    n = len(tokens)
    out = {c: 0.0 for c in dictionary.categories}
    if n == 0:
        return out
    for cat in dictionary.categories:
        hits = 0
        for t in tokens:
            if isinstance(t, Token):
                if t.kind == "emoji":
                    continue
                t = t.surface
            if dictionary.matches(t, cat):
                hits += 1
        out[cat] = hits / n
    return out


def _get(fractions: Mapping[str, float], name: str) -> float:
    for k, v in fractions.items():
        if k.casefold() == name:
            return float(v)
    return 0.0


def sentiment_score(fractions: Mapping[str, float]) -> LexiconScore:
    """``raw = negemo - posemo`` mapped affinely from [-1, 1] onto [1, 4].

    normalized = 3 * (raw + 1) / 2 + 1 = 1.5 * raw + 2.5
    """
    pos = _get(fractions, "posemo")
    neg = _get(fractions, "negemo")
    raw = neg - pos
    return LexiconScore(
        anx_fraction=_get(fractions, "anx"),
        posemo_fraction=pos,
        negemo_fraction=neg,
        raw_sentiment=raw,
        normalized_sentiment=1.5 * raw + 2.5,
    )


def score_text(text: str, dictionary: CategoryDictionary) -> LexiconScore:
    return sentiment_score(category_fractions(tokenize(text), dictionary))


class LexiconScorer(RegressorMixin, BaseEstimator):
    """Training-free baseline; ``predict`` returns normalized sentiment in [1, 4]."""

    def __init__(self, dictionary: CategoryDictionary | None = None):
        self.dictionary = dictionary

    def fit(self, X=None, y=None):
        if self.dictionary is None:
            raise ValueError("LexiconScorer needs a dictionary")
        self.fitted_ = True
        return self

    def predict(self, X):
        return np.array([score_text(t, self.dictionary).normalized_sentiment for t in X])


@dataclass
class BaselineResult:
    report: EvalReport
    tweet_ids: list[str]
    human: np.ndarray
    lexicon: np.ndarray

    def scatter_rows(self):
        return list(zip(self.tweet_ids, self.human.tolist(), self.lexicon.tolist()))


def baseline_evaluate(texts: Sequence[str], y, dictionary: CategoryDictionary,
                      tweet_ids: Sequence[str] | None = None) -> BaselineResult:
    """Score texts with the lexicon and compare against human mean labels.

    If every lexicon score is identical (e.g. no emotion entries at all) the
    R² is reported as undefined: a constant score carries no ranking or
    variance information to assess.
    """
    y = np.asarray(y, dtype=float)
    pred = LexiconScorer(dictionary).fit().predict(texts)
    report = evaluate(y, pred)
    if np.ptp(pred) == 0:
        report.r2 = None
    ids = list(tweet_ids) if tweet_ids is not None else [str(i) for i in range(len(y))]
    return BaselineResult(report, ids, y, pred)


def write_scatter(result: BaselineResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "human", "lexicon"])
        for tid, h, s in result.scatter_rows():
            w.writerow([tid, repr(h), repr(s)])
