"""User-level aggregation, tweet-level correlations, count regressions and plot data."""
from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .glm import PoissonGLM
from .labels import TweetLabel
from .metrics import error_histogram
from .scorer import ScoredTweet

__all__ = [
    "UserAggregate",
    "CorrelationMatrix",
    "GlmFit",
    "PLOT_KINDS",
    "resolve_window",
    "aggregate_users",
    "tweet_table",
    "correlations",
    "fit_count_glm",
    "emit_plot_data",
    "write_aggregates",
    "read_aggregates",
]

CORR_COLUMNS = ("score", "followers", "following", "total_tweets", "is_reply", "is_retweet")
AGG_HEADER = ["user_id", "trait_anxiety", "n_tweets_scored", "followers", "following",
              "total_tweet_count"]


@dataclass(frozen=True)
class UserAggregate:
    user_id: str
    trait_anxiety: float
    n_tweets_scored: int
    followers: int
    following: int
    total_tweet_count: int
    window: tuple[int, int] | None = None


def _minus_months(ts: int, months: int) -> int:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    y, m = divmod(dt.year * 12 + dt.month - 1 - months, 12)
    m += 1
    # clamp the day to the target month's length
    for day in range(dt.day, 27, -1):
        try:
            return int(dt.replace(year=y, month=m, day=day).timestamp())
        except ValueError:
            continue
    return int(dt.replace(year=y, month=m, day=min(dt.day, 28)).timestamp())


def resolve_window(scored: Sequence[ScoredTweet], window) -> tuple[int, int] | None:
    """Turn ``"6m"``/``"12m"``/``"all"``/``None`` or a pair into epoch bounds.

    Month spans end at the latest timestamp in ``scored`` (inclusive).
    """
    if window is None or window == "all":
        return None
    if isinstance(window, (tuple, list)):
        start, end = int(window[0]), int(window[1])
        if start > end:
            raise ValueError("window start after end")
        return start, end
    if isinstance(window, str) and window.endswith("m") and window[:-1].isdigit():
        if not scored:
            return None
        latest = max(s.created_at for s in scored)
        return _minus_months(latest, int(window[:-1])), latest
    raise ValueError(f"unsupported window {window!r}; use '6m', '12m', 'all' or (start, end)")


def aggregate_users(scored: Sequence[ScoredTweet], profiles: Mapping[str, tuple[int, int, int]],
                    window="12m", min_tweets: int = 2) -> list[UserAggregate]:
    """Trait anxiety per user: the mean of their tweet scores inside ``window``.

    ``profiles`` maps user_id to (followers, following, total tweet count);
    see :func:`anxiometer.corpus.user_profiles`. Users with fewer than
    ``min_tweets`` scored tweets in the window are left out. Output is
    sorted by user_id.
    """
    bounds = resolve_window(scored, window)
    by_user: dict[str, list[float]] = defaultdict(list)
    for s in scored:
        if bounds is not None and not bounds[0] <= s.created_at <= bounds[1]:
            continue
        by_user[s.user_id].append(s.score)
    out = []
    for uid in sorted(by_user):
        scores = by_user[uid]
        if len(scores) < min_tweets:
            continue
        fol, fng, total = profiles.get(uid, (0, 0, 0))
        out.append(UserAggregate(uid, float(np.mean(scores)), len(scores), fol, fng, total, bounds))
    return out


def tweet_table(scored: Sequence[ScoredTweet], profiles: Mapping[str, tuple[int, int, int]]) -> dict[str, np.ndarray]:
    """Tweet-level columns used for the correlation table."""
    prof = [profiles.get(s.user_id, (0, 0, 0)) for s in scored]
    return {
        "score": np.array([s.score for s in scored], dtype=float),
        "followers": np.array([p[0] for p in prof], dtype=float),
        "following": np.array([p[1] for p in prof], dtype=float),
        "total_tweets": np.array([p[2] for p in prof], dtype=float),
        "is_reply": np.array([s.is_reply for s in scored], dtype=float),
        "is_retweet": np.array([s.is_retweet for s in scored], dtype=float),
    }


@dataclass
class CorrelationMatrix:
    """Pearson r and two-sided p; NaN marks an undefined pair."""

    names: list[str]
    r: np.ndarray
    p: np.ndarray
    n: int
    means: np.ndarray = field(default=None)
    sds: np.ndarray = field(default=None)

    def get(self, a: str, b: str) -> float:
        return float(self.r[self.names.index(a), self.names.index(b)])

    def write_csv(self, path) -> None:
        def fmt(v):
            return "undefined" if not np.isfinite(v) else repr(float(v))

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["var_a", "var_b", "r", "p", "n"])
            for i, a in enumerate(self.names):
                for j, b in enumerate(self.names):
                    if j < i:
                        continue
                    w.writerow([a, b, fmt(self.r[i, j]), fmt(self.p[i, j]), self.n])


def correlations(table: Mapping[str, Sequence[float]], columns: Sequence[str] | None = None) -> CorrelationMatrix:
    names = list(columns) if columns is not None else list(table)
    M = np.column_stack([np.asarray(table[c], dtype=float) for c in names])
    n, k = M.shape
    if n < 2:
        raise ValueError("correlations need at least 2 observations")
    C = M - M.mean(axis=0)
    ss = np.sqrt(np.sum(C**2, axis=0))
    r = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            if ss[i] == 0 or ss[j] == 0:
                continue
            if i == j:
                r[i, i], p[i, i] = 1.0, 0.0
                continue
            v = float(C[:, i] @ C[:, j]) / (ss[i] * ss[j])
            v = min(1.0, max(-1.0, v))
            r[i, j] = r[j, i] = v
            if n > 2 and abs(v) < 1.0:
                t = v * math.sqrt((n - 2) / (1.0 - v * v))
                pv = 2.0 * stats.t.sf(abs(t), n - 2)
            else:
                pv = 0.0 if abs(v) == 1.0 else 1.0
            p[i, j] = p[j, i] = pv
    sds = M.std(axis=0, ddof=1)
    return CorrelationMatrix(names, r, p, n, M.mean(axis=0), sds)


@dataclass
class GlmFit:
    outcome: str
    names: list[str]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    z: np.ndarray
    p_values: np.ndarray
    pseudo_r2: float
    llf: float
    llnull: float
    n_users: int
    converged: bool
    n_iter: int
    robust: bool = False
    score_max_abs: float = 0.0

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "family": "poisson",
            "link": "log",
            "coefficients": {
                n: {"coef": float(c), "se": float(s), "z": float(z), "p": float(p)}
                for n, c, s, z, p in zip(self.names, self.coefficients, self.standard_errors,
                                         self.z, self.p_values)
            },
            "pseudo_r2_mcfadden": self.pseudo_r2,
            "llf": self.llf,
            "llnull": self.llnull,
            "n_users": self.n_users,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "robust_se": self.robust,
        }

    def summary(self) -> str:
        lines = [f"Poisson GLM (log link)  outcome: {self.outcome}  n = {self.n_users}",
                 f"{'':<20}{'coef':>12}{'z':>10}{'p':>10}"]
        for n, c, z, p in zip(self.names, self.coefficients, self.z, self.p_values):
            lines.append(f"{n:<20}{c:>12.4f}{z:>10.2f}{p:>10.4f}")
        lines.append(f"McFadden pseudo R2 = {self.pseudo_r2:.4f}"
                     + ("" if self.converged else "  (NOT CONVERGED)"))
        return "\n".join(lines)


def fit_count_glm(aggregates: Sequence[UserAggregate], outcome: str = "followers",
                  controls: str | None = None, robust: bool = False,
                  max_iter: int = 100) -> GlmFit:
    """Poisson/log-link regression of a profile count on trait anxiety.

    ``outcome`` is ``"followers"`` or ``"following"``; ``controls`` is None
    or ``"total_tweet_count"`` (entered untransformed).
    """
    if outcome not in ("followers", "following"):
        raise ValueError("outcome must be 'followers' or 'following'")
    if controls not in (None, "none", "total_tweet_count"):
        raise ValueError("controls must be None or 'total_tweet_count'")
    if len(aggregates) < 3:
        raise ValueError("count regression needs at least 3 users")
    y = np.array([getattr(a, outcome) for a in aggregates], dtype=float)
    cols = [np.array([a.trait_anxiety for a in aggregates], dtype=float)]
    names = ["const", "anxiety"]
    if controls == "total_tweet_count":
        cols.append(np.array([a.total_tweet_count for a in aggregates], dtype=float))
        names.append("total_tweet_count")
    X = np.column_stack(cols)
    m = PoissonGLM(max_iter=max_iter, robust=robust).fit(X, y)
    return GlmFit(
        outcome=outcome,
        names=names,
        coefficients=m.params_,
        standard_errors=m.bse_,
        z=m.zvalues_,
        p_values=m.pvalues_,
        pseudo_r2=float(m.pseudo_r2_),
        llf=m.llf_,
        llnull=m.llnull_,
        n_users=len(aggregates),
        converged=m.converged_,
        n_iter=m.n_iter_,
        robust=robust,
        score_max_abs=float(np.max(np.abs(m.score_))),
    )


def write_aggregates(aggregates: Sequence[UserAggregate], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_HEADER)
        for a in aggregates:
            w.writerow([a.user_id, repr(a.trait_anxiety), a.n_tweets_scored, a.followers,
                        a.following, a.total_tweet_count])


def read_aggregates(path) -> list[UserAggregate]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            UserAggregate(r["user_id"], float(r["trait_anxiety"]), int(r["n_tweets_scored"]),
                          int(r["followers"]), int(r["following"]), int(r["total_tweet_count"]))
            for r in csv.DictReader(fh)
        ]


# ---- plot data -------------------------------------------------------------

PLOT_KINDS = ("rater_dots", "ml_vs_human", "error_hist", "lexicon_vs_human", "user_timeline")


def _rater_dots(labels: Sequence[TweetLabel], n_tweets: int | None = None, seed: int = 0):
    labels = list(labels)
    if n_tweets is not None and n_tweets < len(labels):
        pick = np.sort(np.random.default_rng(seed).choice(len(labels), n_tweets, replace=False))
        labels = [labels[i] for i in pick]
    header = ["tweet_id", "rater_index", "rater_score", "tweet_mean"]
    rows = [[lab.tweet_id, i, repr(s), repr(lab.mean_anxiety)]
            for lab in labels for i, s in enumerate(lab.rater_scores)]
    return header, rows


def _pairs(ids, human, other, name):
    human = np.asarray(human, dtype=float)
    other = np.asarray(other, dtype=float)
    if ids is None:
        ids = [str(i) for i in range(len(human))]
    if not len(ids) == len(human) == len(other):
        raise ValueError("plot inputs differ in length")
    return ["tweet_id", "human", name], [[t, repr(float(h)), repr(float(o))]
                                         for t, h, o in zip(ids, human, other)]


def _error_hist(residuals, bins: int = 20):
    h = error_histogram(residuals, bins=bins)
    return ["bin_low", "bin_high", "count"], [[repr(lo), repr(hi), c] for lo, hi, c in h.rows()]


def _day(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d")


def _user_timeline(scored: Sequence[ScoredTweet], user_ids: Sequence[str] | None = None,
                   start: int | None = None, end: int | None = None):
    wanted = set(user_ids) if user_ids is not None else None
    buckets: dict[tuple[str, str], list[float]] = defaultdict(list)
    for s in scored:
        if wanted is not None and s.user_id not in wanted:
            continue
        if start is not None and s.created_at < start:
            continue
        if end is not None and s.created_at > end:
            continue
        buckets[(s.user_id, _day(s.created_at))].append(s.score)
    rows = [[uid, day, repr(float(np.mean(v))), len(v)]
            for (uid, day), v in sorted(buckets.items())]
    return ["user_id", "day", "mean_score", "n_tweets"], rows


def emit_plot_data(kind: str, path: str | os.PathLike | None = None, **inputs):
    """Columnar data behind one figure; written as CSV when ``path`` is given.

    kinds and their inputs:

    * ``rater_dots``: ``labels`` (TweetLabel list), optional ``n_tweets``, ``seed``
    * ``ml_vs_human``: ``human``, ``machine``, optional ``tweet_ids``
    * ``error_hist``: ``residuals``, optional ``bins``
    * ``lexicon_vs_human``: ``human``, ``lexicon``, optional ``tweet_ids``
    * ``user_timeline``: ``scored``, optional ``user_ids``, ``start``, ``end``

    Returns ``(header, rows)``.
    """
    if kind == "rater_dots":
        header, rows = _rater_dots(inputs["labels"], inputs.get("n_tweets"), inputs.get("seed", 0))
    elif kind == "ml_vs_human":
        header, rows = _pairs(inputs.get("tweet_ids"), inputs["human"], inputs["machine"], "machine")
    elif kind == "error_hist":
        header, rows = _error_hist(inputs["residuals"], inputs.get("bins", 20))
    elif kind == "lexicon_vs_human":
        header, rows = _pairs(inputs.get("tweet_ids"), inputs["human"], inputs["lexicon"], "lexicon")
    elif kind == "user_timeline":
        header, rows = _user_timeline(inputs["scored"], inputs.get("user_ids"),
                                      inputs.get("start"), inputs.get("end"))
    else:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    return header, rows


def write_glm_report(fits: Sequence[GlmFit], json_path, text_path=None) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump([f.to_dict() for f in fits], fh, indent=1)
        fh.write("\n")
    if text_path is not None:
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write("\n\n".join(f.summary() for f in fits) + "\n")
