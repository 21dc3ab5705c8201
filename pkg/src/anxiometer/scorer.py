"""Batch scoring of tweet corpora with a trained ensemble."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .corpus import TweetRecord
from .ensemble import AnxietyEnsemble, ChecksumMismatch

__all__ = [
    "SCORE_RANGE",
    "ScoredTweet",
    "ScoringReport",
    "ScoringResult",
    "score_corpus",
    "shard_and_merge",
    "write_scored",
    "read_scored",
    "scored_csv_bytes",
]

SCORE_RANGE = (1.0, 4.0)
SCORED_HEADER = ["tweet_id", "user_id", "created_at_epoch", "score", "is_retweet", "is_reply"]


@dataclass(frozen=True)
class ScoredTweet:
    tweet_id: str
    user_id: str
    created_at: int
    score: float
    is_retweet: bool
    is_reply: bool


@dataclass
class ScoringReport:
    n_input: int = 0
    n_scored: int = 0
    n_excluded: int = 0
    n_excluded_out_of_range: int = 0
    n_failed: int = 0
    n_clamped: int = 0
    excluded_fraction: float = 0.0
    mean: float | None = None
    sd: float | None = None
    seconds: float = 0.0
    throughput: float | None = None
    n_shards: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


@dataclass
class ScoringResult:
    scored: list[ScoredTweet]
    report: ScoringReport
    exclusions: list[tuple[str, str]] = field(default_factory=list)


def _score_shard(records: Sequence[TweetRecord], ensemble: AnxietyEnsemble, clamp: bool):
    lo, hi = SCORE_RANGE
    kept, excluded, n_clamped = [], [], 0
    for rec in records:
        try:
            s = ensemble.score_text(rec.text)
        except Exception as exc:  # featurization failure excludes the tweet only
            excluded.append((rec.tweet_id, f"featurization_error: {type(exc).__name__}"))
            continue
        if not math.isfinite(s):
            excluded.append((rec.tweet_id, "non_finite"))
            continue
        if not lo <= s <= hi:
            if not clamp:
                excluded.append((rec.tweet_id, "out_of_range"))
                continue
            s = min(max(s, lo), hi)
            n_clamped += 1
        kept.append(ScoredTweet(rec.tweet_id, rec.user_id, rec.created_at, s,
                                rec.is_retweet, rec.is_reply))
    return kept, excluded, n_clamped


def score_corpus(corpus: Sequence[TweetRecord], ensemble: AnxietyEnsemble, clamp: bool = False,
                 n_shards: int = 1, n_jobs: int = 1) -> ScoringResult:
    """Score every record; drop (or with ``clamp``, clip) scores outside [1, 4].

    The corpus is cut into ``n_shards`` contiguous shards which may run on
    ``n_jobs`` threads; results are merged in shard order, so output is
    independent of both settings.
    """
    if n_shards < 1:
        raise ValueError("n_shards must be >= 1")
    expected = getattr(ensemble, "embedding_checksum_", None)
    if expected is not None and expected != ensemble.table.checksum:
        raise ChecksumMismatch("embedding table changed since the model was trained/loaded")
    records = list(corpus)
    bounds = np.linspace(0, len(records), n_shards + 1).astype(int)
    shards = [records[bounds[i]:bounds[i + 1]] for i in range(n_shards)]

    t0 = time.perf_counter()
    if n_jobs > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda s: _score_shard(s, ensemble, clamp), shards))
    else:
        parts = [_score_shard(s, ensemble, clamp) for s in shards]
    elapsed = time.perf_counter() - t0

    scored, exclusions, n_clamped = [], [], 0
    for kept, excl, nc in parts:
        scored.extend(kept)
        exclusions.extend(excl)
        n_clamped += nc
    n_oor = sum(1 for _, reason in exclusions if reason == "out_of_range")
    n = len(records)
    scores = np.array([s.score for s in scored])
    report = ScoringReport(
        n_input=n,
        n_scored=len(scored),
        n_excluded=len(exclusions),
        n_excluded_out_of_range=n_oor,
        n_failed=len(exclusions) - n_oor,
        n_clamped=n_clamped,
        excluded_fraction=len(exclusions) / n if n else 0.0,
        mean=float(scores.mean()) if scores.size else None,
        sd=float(scores.std(ddof=1)) if scores.size > 1 else None,
        seconds=elapsed,
        throughput=n / elapsed if elapsed > 0 and n else None,
        n_shards=n_shards,
    )
    return ScoringResult(scored, report, exclusions)


def shard_and_merge(corpus, ensemble, n_shards: int, **kwargs) -> ScoringResult:
    return score_corpus(corpus, ensemble, n_shards=n_shards, **kwargs)


def _rows(scored):
    for s in scored:
        yield [s.tweet_id, s.user_id, s.created_at, repr(float(s.score)),
               int(s.is_retweet), int(s.is_reply)]


def write_scored(scored: Sequence[ScoredTweet], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORED_HEADER)
        w.writerows(_rows(scored))


def scored_csv_bytes(scored: Sequence[ScoredTweet]) -> bytes:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORED_HEADER)
    w.writerows(_rows(scored))
    return buf.getvalue().encode("utf-8")


def read_scored(path) -> list[ScoredTweet]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(ScoredTweet(
                row["tweet_id"], row["user_id"], int(row["created_at_epoch"]),
                float(row["score"]), row["is_retweet"] in ("1", "true", "True"),
                row["is_reply"] in ("1", "true", "True"),
            ))
    return out
