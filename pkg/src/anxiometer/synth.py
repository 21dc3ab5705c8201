"""Synthetic worlds with planted ground truth.

A world holds an embedding table, a labeled tweet set rated by simulated
STAI-6 raters, a larger multi-user corpus, and profile counts drawn from a
planted Poisson model. Every tweet's true score is an exact linear function
of its embedding-mean features, so recovery can be checked end to end.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .corpus import TweetRecord, write_jsonl
from .features import EmbeddingTable, embed_mean, parse_embeddings, tokenize
from .labels import DEFAULT_REVERSED, LabelObservation, aggregate_labels, write_labels

__all__ = ["SynthConfig", "SyntheticWorld", "generate_synthetic"]

_EMOJI = ("😞", "😟", "🙂", "😊", "😭", "🔥")


@dataclass
class SynthConfig:
    vocab_size: int = 120
    embed_dim: int = 16
    latent_weights: list[float] | None = None
    tweet_length: int = 8
    emoji_rate: float = 0.3
    truth_sd: float = 0.45
    truth_center: float = 2.5
    n_labeled: int = 600
    raters_per_tweet: tuple[int, int] = (4, 6)
    n_raters: int = 604
    rater_noise_sd: float = 0.6
    label_tilt_range: float = 2.0
    n_users: int = 200
    tweets_per_user: float = 20.0
    min_tweets_per_user: int = 2
    user_tilt_sd: float = 0.8
    state_tilt_sd: float = 0.8
    retweet_share: float = 0.6
    reply_share: float = 0.09
    start: str = "2016-07-01"
    end: str = "2017-12-31"
    followers_intercept: float = 9.5
    followers_slope: float = -0.6
    following_intercept: float = 7.9
    following_slope: float = -0.4
    demo_dictionary_size: int = 12

    def validate(self) -> None:
        if self.latent_weights is not None and len(self.latent_weights) != self.embed_dim:
            raise ValueError("latent_weights length must equal embed_dim")
        if self.vocab_size < 4 or self.embed_dim < 1 or self.tweet_length < 1:
            raise ValueError("vocab_size >= 4, embed_dim >= 1 and tweet_length >= 1 required")
        lo, hi = self.raters_per_tweet
        if not 1 <= lo <= hi or hi > self.n_raters:
            raise ValueError("raters_per_tweet must satisfy 1 <= lo <= hi <= n_raters")
        if self.rater_noise_sd < 0 or self.truth_sd <= 0:
            raise ValueError("rater_noise_sd must be >= 0 and truth_sd > 0")
        if self.min_tweets_per_user < 1 or self.n_users < 0 or self.n_labeled < 0:
            raise ValueError("counts must be nonnegative (min_tweets_per_user >= 1)")
        if not (0 <= self.retweet_share <= 1 and 0 <= self.reply_share <= 1):
            raise ValueError("shares must lie in [0, 1]")
        if 2 * self.demo_dictionary_size > self.vocab_size:
            raise ValueError("demo dictionary larger than vocabulary")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "raters_per_tweet" in d:
            d["raters_per_tweet"] = tuple(d["raters_per_tweet"])
        return cls(**d)


@dataclass
class SyntheticWorld:
    config: SynthConfig
    seed: int
    embedding_bytes: bytes
    table: EmbeddingTable
    weights: np.ndarray
    intercept: float
    labeled: list[TweetRecord]
    observations: list[LabelObservation]
    corpus: list[TweetRecord]
    true_scores: dict[str, float]
    users: dict[str, dict]
    dictionary_rows: list[tuple[str, str]]
    explainable_variance: float = float("nan")
    extra: dict = field(default_factory=dict)

    def truth_document(self) -> dict:
        return {
            "seed": self.seed,
            "config": asdict(self.config),
            "embedding_weights": [float(w) for w in self.weights],
            "embedding_intercept": self.intercept,
            "explainable_variance": self.explainable_variance,
            "followers": {"intercept": self.config.followers_intercept,
                          "anxiety": self.config.followers_slope},
            "following": {"intercept": self.config.following_intercept,
                          "anxiety": self.config.following_slope},
        }

    def write(self, outdir: str | os.PathLike) -> dict[str, str]:
        """Write all artifacts under ``outdir``; returns name -> path."""
        os.makedirs(outdir, exist_ok=True)
        paths = {k: os.path.join(outdir, v) for k, v in {
            "corpus": "corpus.jsonl",
            "labeled_corpus": "labeled.jsonl",
            "labels": "labels.csv",
            "embeddings": "embeddings.txt",
            "dictionary": "dictionary.csv",
            "truth": "truth.json",
            "true_scores": "true_scores.csv",
            "users": "true_users.csv",
        }.items()}
        write_jsonl(self.corpus, paths["corpus"])
        write_jsonl(self.labeled, paths["labeled_corpus"])
        write_labels(self.observations, paths["labels"])
        with open(paths["embeddings"], "wb") as fh:
            fh.write(self.embedding_bytes)
        with open(paths["dictionary"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["entry", "category"])
            w.writerows(self.dictionary_rows)
        with open(paths["truth"], "w", encoding="utf-8") as fh:
            json.dump(self.truth_document(), fh, indent=1)
            fh.write("\n")
        with open(paths["true_scores"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tweet_id", "true_score"])
            w.writerows((k, repr(v)) for k, v in self.true_scores.items())
        with open(paths["users"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "true_trait", "followers", "following", "total_tweet_count"])
            for uid, u in self.users.items():
                w.writerow([uid, repr(u["trait"]), u["followers"], u["following"],
                            u["total_tweet_count"]])
        return paths


def _epoch(day: str) -> int:
    return int(datetime.strptime(day, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp())


def _fmt(x: float) -> str:
    return repr(float(np.round(x, 6)))


def _items_for(score: float, reversed_mask, rng) -> tuple[int, ...]:
    """Six item responses whose recoded mean is ``score`` rounded to 1/6."""
    total = int(np.clip(np.rint(6 * score), 6, 24))
    base, rem = divmod(total, 6)
    recoded = np.full(6, base)
    if rem:
        recoded[rng.permutation(6)[:rem]] += 1
    return tuple(int(5 - v if rev else v) for v, rev in zip(recoded, reversed_mask))


def generate_synthetic(config: SynthConfig | None = None, seed: int = 0) -> SyntheticWorld:
    """Build a deterministic synthetic world from ``config`` and ``seed``."""
    cfg = config or SynthConfig()
    cfg.validate()
    rng = np.random.default_rng(seed)
    V, D, L = cfg.vocab_size, cfg.embed_dim, cfg.tweet_length

    words = [f"w{j:04d}" for j in range(V)]
    raw_vecs = rng.normal(size=(V, D))
    lines = "".join(w + " " + " ".join(_fmt(x) for x in row) + "\n" for w, row in zip(words, raw_vecs))
    embedding_bytes = lines.encode("utf-8")
    table = parse_embeddings(io.BytesIO(embedding_bytes).readlines(), name="synthetic")
    vecs = table.vectors

    direction = (np.asarray(cfg.latent_weights, dtype=float) if cfg.latent_weights is not None
                 else rng.normal(size=D))
    proj = vecs @ direction
    pz = (proj - proj.mean()) / proj.std()

    def draw_text(tilt: float) -> str:
        p = np.exp(tilt * pz)
        toks = list(rng.choice(words, size=L, p=p / p.sum()))
        if rng.random() < cfg.emoji_rate:
            toks.insert(int(rng.integers(0, L + 1)), str(rng.choice(_EMOJI)))
        if rng.random() < 0.3:
            toks[0] = toks[0].capitalize()
        return " ".join(toks) + ("!" if rng.random() < 0.2 else "")

    def raw_signal(text: str) -> float:
        return float(embed_mean(tokenize(text), table) @ direction)

    # labeled set: tilts spread uniformly so labels cover the scale
    t0 = _epoch(cfg.start)
    t1 = _epoch(cfg.end) + 86399
    lab_texts = [draw_text(t) for t in rng.uniform(-cfg.label_tilt_range, cfg.label_tilt_range,
                                                   size=cfg.n_labeled)]
    sig = np.array([raw_signal(t) for t in lab_texts]) if lab_texts else np.zeros(1)
    scale = cfg.truth_sd / sig.std() if sig.std() > 0 else 1.0
    weights = scale * direction
    intercept = cfg.truth_center - scale * float(sig.mean())

    def truth(text: str) -> float:
        return float(embed_mean(tokenize(text), table) @ weights) + intercept

    true_scores: dict[str, float] = {}
    labeled = []
    for i, text in enumerate(lab_texts):
        tid = f"L{i:05d}"
        labeled.append(TweetRecord(tid, f"lu{i:05d}", int(rng.integers(t0, t1)), text,
                                   False, False, "en"))
        true_scores[tid] = truth(text)

    raters = [f"r{j:04d}" for j in range(cfg.n_raters)]
    lo, hi = cfg.raters_per_tweet
    observations = []
    for rec in labeled:
        k = int(rng.integers(lo, hi + 1))
        for r in rng.choice(cfg.n_raters, size=k, replace=False):
            perceived = true_scores[rec.tweet_id] + rng.normal(0.0, cfg.rater_noise_sd)
            observations.append(LabelObservation(rec.tweet_id, raters[r],
                                                 _items_for(perceived, DEFAULT_REVERSED, rng)))

    explainable = float("nan")
    if len(labeled) > 2:
        labs = aggregate_labels(observations)
        y = np.array([lab.mean_anxiety for lab in labs])
        t = np.array([true_scores[lab.tweet_id] for lab in labs])
        explainable = float(np.corrcoef(y, t)[0, 1] ** 2)

    # multi-user corpus
    corpus = []
    users: dict[str, dict] = {}
    for u in range(cfg.n_users):
        uid = f"u{u:05d}"
        user_tilt = rng.normal(0.0, cfg.user_tilt_sd)
        n = max(cfg.min_tweets_per_user, int(rng.poisson(cfg.tweets_per_user)))
        times = np.sort(rng.integers(t0, t1, size=n))
        recs = []
        for j in range(n):
            text = draw_text(user_tilt + rng.normal(0.0, cfg.state_tilt_sd))
            tid = f"T{u:05d}{j:05d}"
            r = rng.random()
            is_rt = bool(r < cfg.retweet_share)
            is_rp = bool(not is_rt and r < cfg.retweet_share + cfg.reply_share)
            recs.append((tid, int(times[j]), text, is_rt, is_rp))
            true_scores[tid] = truth(text)
        trait = float(np.mean([true_scores[r[0]] for r in recs]))
        followers = int(rng.poisson(np.exp(cfg.followers_intercept + cfg.followers_slope * trait)))
        following = int(rng.poisson(np.exp(cfg.following_intercept + cfg.following_slope * trait)))
        total = n + int(rng.poisson(cfg.tweets_per_user))
        users[uid] = {"trait": trait, "followers": followers, "following": following,
                      "total_tweet_count": total, "n_tweets": n}
        for tid, ts, text, is_rt, is_rp in recs:
            corpus.append(TweetRecord(tid, uid, ts, text, is_rt, is_rp, "en",
                                      followers, following, total))

    # demo lexicon: extreme-projection words as emotion entries
    order = np.argsort(pz)
    k = cfg.demo_dictionary_size
    dictionary_rows = [(words[j], "posemo") for j in order[:k]]
    dictionary_rows += [(words[j], "negemo") for j in order[::-1][:k]]
    dictionary_rows += [(words[j], "anx") for j in order[::-1][:max(1, k // 4)]]

    return SyntheticWorld(
        config=cfg, seed=seed, embedding_bytes=embedding_bytes, table=table,
        weights=weights, intercept=intercept, labeled=labeled, observations=observations,
        corpus=corpus, true_scores=true_scores, users=users, dictionary_rows=dictionary_rows,
        explainable_variance=explainable,
    )
