import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anxiometer.corpus import TweetRecord
from anxiometer.ensemble import AnxietyEnsemble, ChecksumMismatch
from anxiometer.features import EmbeddingTable
from anxiometer.labels import aggregate_labels
from anxiometer.scorer import read_scored, score_corpus, scored_csv_bytes, write_scored


@pytest.fixture(scope="module")
def ens(small_world):
    labs = aggregate_labels(small_world.observations)
    texts = {r.tweet_id: r.text for r in small_world.labeled}
    return AnxietyEnsemble(small_world.table).fit([texts[l.tweet_id] for l in labs],
                                                  [l.mean_anxiety for l in labs])


def _h(result):
    return hashlib.sha256(scored_csv_bytes(result.scored)).hexdigest()


def test_empty_corpus(ens):
    res = score_corpus([], ens)
    assert res.scored == [] and res.report.n_excluded == 0 and res.report.mean is None


def test_scalar_loop_oracle(ens, small_world):
    corpus = small_world.corpus
    res = score_corpus(corpus, ens)
    kept = [ens.score_text(r.text) for r in corpus]
    kept = [s for s in kept if 1.0 <= s <= 4.0]
    assert [s.score for s in res.scored] == kept
    # streaming mean / variance
    n, mean, m2 = 0, 0.0, 0.0
    for s in kept:
        n += 1
        d = s - mean
        mean += d / n
        m2 += d * (s - mean)
    assert res.report.mean == pytest.approx(mean, abs=1e-12)
    assert res.report.sd == pytest.approx((m2 / (n - 1)) ** 0.5, abs=1e-12)
    assert res.report.n_scored + res.report.n_excluded == len(corpus)
    assert res.report.throughput > 0


@pytest.mark.parametrize("shards, jobs", [(7, 1), (7, 4), (5000, 1), (3, 3)])
def test_sharding_is_invisible(ens, small_world, shards, jobs):
    base = _h(score_corpus(small_world.corpus, ens))
    assert _h(score_corpus(small_world.corpus, ens, n_shards=shards, n_jobs=jobs)) == base


def _shifted(ens, delta):
    """Copy of the ensemble with both intercepts moved by ``delta``."""
    from anxiometer.ensemble import AnxietyEnsemble

    out = AnxietyEnsemble.from_dict(ens.to_dict(), ens.table)
    out.model_embed_.intercept_ += delta
    out.model_occur_.intercept_ += delta
    return out


def test_out_of_range_excluded_or_clamped(ens, small_world):
    hot = _shifted(ens, 1.2)
    res = score_corpus(small_world.corpus, hot)
    assert res.report.n_excluded_out_of_range > 0
    assert all(1.0 <= s.score <= 4.0 for s in res.scored)
    assert {r for _, r in res.exclusions} == {"out_of_range"}
    assert res.report.excluded_fraction == pytest.approx(
        res.report.n_excluded / (res.report.n_scored + res.report.n_excluded))
    clamped = score_corpus(small_world.corpus, hot, clamp=True)
    assert clamped.report.n_scored == len(small_world.corpus)
    assert clamped.report.n_clamped == res.report.n_excluded_out_of_range


def test_checksum_mismatch(ens, small_world):
    other = _shifted(ens, 0.0)
    other.embedding_checksum_ = "deadbeef"
    with pytest.raises(ChecksumMismatch):
        score_corpus(small_world.corpus, other)


def test_featurization_failure_excluded(ens):
    recs = [TweetRecord("1", "u", 0, "fine", False, False), TweetRecord("2", "u", 0, None, False, False)]
    res = score_corpus(recs, ens)
    assert res.report.n_failed == 1 and res.exclusions[0][0] == "2"


def test_csv_roundtrip(ens, small_world, tmp_path):
    res = score_corpus(small_world.corpus[:50], ens)
    write_scored(res.scored, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_bytes() == scored_csv_bytes(res.scored)
    assert read_scored(tmp_path / "s.csv") == res.scored
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == \
        "tweet_id,user_id,created_at_epoch,score,is_retweet,is_reply"


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c a", "b b", "zz"]), max_size=30), st.integers(1, 40))
def test_accounting_and_determinism_property(texts, shards):
    table = EmbeddingTable.from_dict({"a": [1.0], "b": [-1.0], "c": [0.5]})
    ens = AnxietyEnsemble(table).fit(["a", "b", "c a", "b b", "a a"], [3.9, 1.1, 3.0, 1.0, 4.0])
    recs = [TweetRecord(str(i), "u", i, t, False, False) for i, t in enumerate(texts)]
    one = score_corpus(recs, ens)
    many = score_corpus(recs, ens, n_shards=shards, n_jobs=2)
    assert one.report.n_scored + one.report.n_excluded == len(recs)
    assert scored_csv_bytes(one.scored) == scored_csv_bytes(many.scored)
    assert all(1.0 <= s.score <= 4.0 for s in one.scored)
