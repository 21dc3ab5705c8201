import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anxiometer.labels import (
    LabelObservation,
    TweetLabel,
    aggregate_labels,
    cronbach_alpha,
    icc_oneway,
    label_distribution,
    load_labels,
    rater_score,
    write_labels,
)

from oracles import anova_icc

items_st = st.tuples(*[st.integers(1, 4)] * 6)


def test_rater_score_worked():
    assert rater_score((1, 4, 3, 1, 2, 4)) == pytest.approx(22 / 6)
    assert rater_score((4, 1, 1, 4, 4, 1)) == 1.0
    assert rater_score((1, 4, 4, 1, 1, 4)) == 4.0


@pytest.mark.parametrize("items", [(0, 1, 1, 1, 1, 1), (1, 1, 1, 1, 1), (1, 1, 1, 1, 1, 5)])
def test_bad_items_rejected(items):
    with pytest.raises(ValueError):
        LabelObservation("t", "r", items)


@given(items_st)
def test_rater_score_in_range(items):
    s = rater_score(items)
    assert 1.0 <= s <= 4.0
    assert round(s * 6) == s * 6 or abs(s * 6 - round(s * 6)) < 1e-12


def test_aggregate_order_and_duplicates():
    obs = [LabelObservation("b", "r1", (1,) * 6), LabelObservation("a", "r1", (2,) * 6),
           LabelObservation("b", "r2", (3,) * 6)]
    labs = aggregate_labels(obs)
    assert [lab.tweet_id for lab in labs] == ["b", "a"]
    assert labs[0].n_raters == 2
    with pytest.raises(ValueError, match="duplicate"):
        aggregate_labels(obs + [LabelObservation("b", "r1", (1,) * 6)])


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 12), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_icc_matches_anova_balanced(m, k, seed):
    rng = np.random.default_rng(seed)
    groups = (rng.normal(size=(m, 1)) + rng.normal(size=(m, k))).tolist()
    labs = [TweetLabel(str(i), float(np.mean(g)), k, tuple(g)) for i, g in enumerate(groups)]
    assert icc_oneway(labs).icc == pytest.approx(anova_icc(groups), abs=1e-9)


def test_noiseless_icc_is_one():
    labs = [TweetLabel(str(i), v, 3, (v, v, v)) for i, v in enumerate([1.0, 2.5, 3.0, 4.0])]
    res = icc_oneway(labs)
    assert res.icc == 1.0 and res.flag is None


def test_icc_unbalanced_and_singletons():
    labs = [TweetLabel("a", 1.0, 1, (1.0,)),
            TweetLabel("b", 2.0, 3, (1.5, 2.0, 2.5)),
            TweetLabel("c", 3.0, 2, (3.0, 3.0)),
            TweetLabel("d", 3.5, 4, (3.0, 4.0, 3.5, 3.5))]
    res = icc_oneway(labs)
    assert res.n_excluded_singletons == 1 and res.n_groups == 3 and res.n_obs == 9
    assert res.k0 == pytest.approx((9 - 29 / 9) / 2)
    assert res.ci95[0] < res.icc < res.ci95[1]


def test_icc_non_positive_flag():
    labs = [TweetLabel("a", 2.5, 2, (1.0, 4.0)), TweetLabel("b", 2.5, 2, (4.0, 1.0))]
    res = icc_oneway(labs)
    assert res.icc <= 0 and res.flag == "non-positive"


def test_icc_needs_two_groups():
    with pytest.raises(ValueError):
        icc_oneway([TweetLabel("a", 1.0, 2, (1.0, 1.0))])


def test_icc_standard_error_balanced_reduces_to_fisher():
    rng = np.random.default_rng(0)
    m, k = 400, 5
    groups = (rng.normal(size=(m, 1)) + rng.normal(size=(m, k))).tolist()
    res = icc_oneway([TweetLabel(str(i), 0.0, k, tuple(g)) for i, g in enumerate(groups)])
    r = res.icc
    fisher = np.sqrt(2 * (1 - r) ** 2 * (1 + (k - 1) * r) ** 2 / (k * (k - 1) * (m - 1)))
    assert res.standard_error == pytest.approx(fisher, rel=0.02)


def test_distribution_and_alpha():
    dist = label_distribution([1.0, 2.0, 3.0, 4.0], bins=3)
    assert dist.counts.tolist() == [1, 1, 2]
    assert not dist.balanced
    assert label_distribution(np.linspace(1, 4, 12), bins=3).balanced
    X = [[1, 4, 4, 1, 1, 4], [4, 1, 1, 4, 4, 1], [2, 3, 3, 2, 2, 3]]
    assert cronbach_alpha(X) == pytest.approx(1.0)


def test_label_file_roundtrip(tmp_path):
    obs = [LabelObservation("t1", "r1", (1, 2, 3, 4, 1, 2)), LabelObservation("t1", "r2", (4,) * 6)]
    write_labels(obs, tmp_path / "l.csv")
    assert load_labels(tmp_path / "l.csv") == obs
    (tmp_path / "bad.csv").write_text("tweet_id,rater_id,item1\n")
    with pytest.raises(ValueError, match="missing columns"):
        load_labels(tmp_path / "bad.csv")
