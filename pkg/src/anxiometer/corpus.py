"""Offline tweet corpus ingestion, statistics and filtering.

Records arrive as JSON lines (one object per line) with the keys
``id``, ``user_id``, ``created_at``, ``text``, ``is_retweet`` and
``is_reply``; ``lang``, ``user_followers``, ``user_following`` and
``user_tweet_count`` are optional.
"""
from __future__ import annotations

import csv
import io
import json
import os
import re
import unicodedata
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

__all__ = [
    "TweetRecord",
    "CorpusStats",
    "IngestResult",
    "ingest",
    "read_jsonl",
    "stats",
    "filter_corpus",
    "normalize_text",
    "parse_timestamp",
    "write_rejections",
    "write_jsonl",
    "user_profiles",
]

REQUIRED_KEYS = ("id", "user_id", "created_at", "text", "is_retweet", "is_reply")
COUNT_KEYS = ("user_followers", "user_following", "user_tweet_count")

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    created_at: int
    text: str
    is_retweet: bool
    is_reply: bool
    lang: str | None = None
    user_followers: int = 0
    user_following: int = 0
    user_tweet_count: int = 0

    def to_json(self) -> dict:
        out = {
            "id": self.tweet_id,
            "user_id": self.user_id,
            "created_at": datetime.fromtimestamp(self.created_at, tz=timezone.utc)
            .strftime("%Y-%m-%dT%H:%M:%SZ"),
            "text": self.text,
            "is_retweet": self.is_retweet,
            "is_reply": self.is_reply,
        }
        if self.lang is not None:
            out["lang"] = self.lang
        for key in COUNT_KEYS:
            out[key] = getattr(self, key)
        return out


@dataclass(frozen=True)
class CorpusStats:
    n_tweets: int = 0
    n_users: int = 0
    retweet_share: float = 0.0
    reply_share: float = 0.0
    unique_text_share: float = 0.0
    mean_tweets_per_user: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class IngestResult:
    """Valid records plus the bookkeeping of what was dropped."""

    records: list[TweetRecord] = field(default_factory=list)
    rejections: list[tuple[int, str]] = field(default_factory=list)
    duplicates: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_duplicates(self) -> int:
        return len(self.duplicates)

    def __len__(self) -> int:
        return len(self.records)


def normalize_text(text: str) -> str:
    """NFC-normalize and collapse whitespace runs; no case folding."""
    return _WS.sub(" ", unicodedata.normalize("NFC", text)).strip()


def parse_timestamp(value) -> int:
    """ISO-8601 string (or epoch number) to UTC epoch seconds.

    Naive timestamps are taken as UTC.
    """
    if isinstance(value, bool):
        raise ValueError("timestamp must be a string or number")
    if isinstance(value, (int, float)):
        return int(value)
    if not isinstance(value, str):
        raise ValueError("timestamp must be a string or number")
    s = value.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _parse_record(obj) -> TweetRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in REQUIRED_KEYS:
        if key not in obj or obj[key] is None:
            raise ValueError(f"missing field: {key}")
    tweet_id, user_id, text = obj["id"], obj["user_id"], obj["text"]
    if not isinstance(tweet_id, str) or not tweet_id:
        raise ValueError("bad field: id")
    if not isinstance(user_id, str) or not user_id:
        raise ValueError("bad field: user_id")
    if not isinstance(text, str):
        raise ValueError("bad field: text")
    if not text.strip():
        raise ValueError("empty text")
    for key in ("is_retweet", "is_reply"):
        if not isinstance(obj[key], bool):
            raise ValueError(f"bad field: {key}")
    try:
        created_at = parse_timestamp(obj["created_at"])
    except (ValueError, OverflowError):
        raise ValueError("bad field: created_at") from None
    counts = {}
    for key in COUNT_KEYS:
        value = obj.get(key, 0)
        if value is None:
            value = 0
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValueError(f"bad field: {key}")
        counts[key] = value
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise ValueError("bad field: lang")
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        created_at=created_at,
        text=text,
        is_retweet=obj["is_retweet"],
        is_reply=obj["is_reply"],
        lang=lang,
        **counts,
    )


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def ingest(source: str | os.PathLike | Iterable[str] | IO[str]) -> IngestResult:
    """Read a JSON-lines stream into validated, deduplicated records.

    ``source`` is a path or any iterable of lines. Malformed lines are
    rejected with their 1-based line number; repeated tweet ids after the
    first are dropped and listed in ``duplicates``. Blank lines are skipped.
    An unreadable path raises ``OSError``.
    """
    result = IngestResult()
    seen: set[str] = set()
    profiles: dict[str, tuple[int, int, int]] = {}
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            result.rejections.append((lineno, "invalid json"))
            continue
        try:
            rec = _parse_record(obj)
        except ValueError as exc:
            result.rejections.append((lineno, str(exc)))
            continue
        if rec.tweet_id in seen:
            result.duplicates.append((lineno, rec.tweet_id))
            continue
        prof = (rec.user_followers, rec.user_following, rec.user_tweet_count)
        if profiles.setdefault(rec.user_id, prof) != prof:
            result.rejections.append((lineno, "inconsistent profile counts"))
            continue
        seen.add(rec.tweet_id)
        result.records.append(rec)
    return result


def read_jsonl(path) -> list[TweetRecord]:
    """Shorthand for ``ingest(path).records``."""
    return ingest(path).records


def write_jsonl(records: Iterable[TweetRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def write_rejections(result: IngestResult, path_or_buf) -> None:
    """Write the ``line,reason`` rejection report (duplicates included)."""
    rows = [(ln, reason) for ln, reason in result.rejections]
    rows += [(ln, f"duplicate id: {tid}") for ln, tid in result.duplicates]
    rows.sort()
    own = isinstance(path_or_buf, (str, os.PathLike))
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["line", "reason"])
        writer.writerows(rows)
    finally:
        if own:
            fh.close()


def stats(corpus: Iterable[TweetRecord]) -> CorpusStats:
    records = corpus.records if isinstance(corpus, IngestResult) else list(corpus)
    n = len(records)
    if n == 0:
        return CorpusStats()
    users = {r.user_id for r in records}
    texts = {normalize_text(r.text) for r in records}
    return CorpusStats(
        n_tweets=n,
        n_users=len(users),
        retweet_share=sum(r.is_retweet for r in records) / n,
        reply_share=sum(r.is_reply for r in records) / n,
        unique_text_share=len(texts) / n,
        mean_tweets_per_user=n / len(users),
    )


def filter_corpus(
    corpus: Iterable[TweetRecord],
    drop_retweets: bool = False,
    drop_replies: bool = False,
    require_unique_text: bool = False,
    time_window: tuple[int, int] | None = None,
) -> list[TweetRecord]:
    """Order-preserving subset of ``corpus``.

    ``time_window`` is an inclusive ``(start, end)`` pair of epoch seconds.
    With ``require_unique_text`` the first record carrying each normalized
    text is kept.
    """
    if time_window is not None:
        start, end = time_window
        if start > end:
            raise ValueError("time_window start must not exceed end")
    out = []
    seen: set[str] = set()
    for rec in corpus:
        if drop_retweets and rec.is_retweet:
            continue
        if drop_replies and rec.is_reply:
            continue
        if time_window is not None and not (start <= rec.created_at <= end):
            continue
        if require_unique_text:
            key = normalize_text(rec.text)
            if key in seen:
                continue
            seen.add(key)
        out.append(rec)
    return out


def user_profiles(corpus: Iterable[TweetRecord]) -> dict[str, tuple[int, int, int]]:
    """Map user_id to (followers, following, tweet_count).

    Profile counts are collection-time snapshots; conflicting values for a
    user raise ``ValueError``.
    """
    out: dict[str, tuple[int, int, int]] = {}
    for rec in corpus:
        prof = (rec.user_followers, rec.user_following, rec.user_tweet_count)
        prev = out.setdefault(rec.user_id, prof)
        if prev != prof:
            raise ValueError(f"inconsistent profile counts for user {rec.user_id}")
    return out


def dumps_records(records: Iterable[TweetRecord]) -> str:
    buf = io.StringIO()
    for rec in records:
        buf.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
        buf.write("\n")
    return buf.getvalue()
