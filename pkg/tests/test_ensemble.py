import json

import numpy as np
import pytest
from sklearn.base import clone

from anxiometer.ensemble import (
    AnxietyEnsemble,
    ChecksumMismatch,
    load_ensemble,
    predict_ensemble,
    save_ensemble,
)
from anxiometer.features import EmbeddingTable, embed_mean, occurrence_vector, tokenize
from anxiometer.labels import aggregate_labels


@pytest.fixture(scope="module")
def fitted(small_world):
    labs = aggregate_labels(small_world.observations)
    texts = {r.tweet_id: r.text for r in small_world.labeled}
    X = [texts[lab.tweet_id] for lab in labs]
    y = [lab.mean_anxiety for lab in labs]
    return AnxietyEnsemble(small_world.table).fit(X, y), X, np.array(y)


def test_prediction_is_mean_of_submodels(fitted):
    ens, X, _ = fitted
    text = X[0]
    toks = tokenize(text)
    e = embed_mean(toks, ens.table)
    p1 = float(e @ ens.model_embed_.coef_ + ens.model_embed_.intercept_)
    occ = ens.occurrence_vectorizer_.transform([text]).toarray()[0]
    p2 = float(occ @ ens.model_occur_.coef_ + ens.model_occur_.intercept_)
    assert predict_ensemble(ens, text) == pytest.approx((p1 + p2) / 2, abs=1e-12)
    assert ens.score_parts(text) == pytest.approx((p1, p2), abs=1e-12)


def test_batch_equals_scalar_and_fit_is_useful(fitted):
    ens, X, y = fitted
    pred = ens.predict(X)
    assert pred.tolist() == [ens.score_text(t) for t in X]
    assert np.corrcoef(pred, y)[0, 1] > 0.8


def test_hand_set_ensemble():
    table = EmbeddingTable.from_dict({"a": [1.0], "b": [-1.0]})
    ens = AnxietyEnsemble(table).fit(["a a", "b", "a b", "b b a"], [3.0, 1.0, 2.0, 1.5])
    ens.model_embed_.coef_ = np.array([0.5])
    ens.model_embed_.intercept_ = 2.0
    ens.model_occur_.coef_ = np.zeros(len(ens.vocabulary_))
    ens.model_occur_.intercept_ = 3.0
    ens._index_weights()
    # embed 1.0 -> 2.5; occurrence -> 3.0
    assert ens.score_text("a") == 2.75


def test_artifact_roundtrip(fitted, tmp_path):
    ens, X, _ = fitted
    path = tmp_path / "m.json"
    save_ensemble(ens, path)
    doc = json.loads(path.read_text())
    assert doc["format"] == "anxiometer.ensemble" and doc["version"] == 1
    assert doc["embedding"]["checksum"] == ens.table.checksum
    back = load_ensemble(path, ens.table)
    assert back.predict(X).tolist() == ens.predict(X).tolist()
    save_ensemble(back, tmp_path / "m2.json")
    assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()


def test_artifact_rejects_other_table(fitted, tmp_path):
    ens, _, _ = fitted
    save_ensemble(ens, tmp_path / "m.json")
    other = EmbeddingTable(ens.table.vocabulary, ens.table.vectors + 1.0, checksum="x")
    with pytest.raises(ChecksumMismatch):
        load_ensemble(tmp_path / "m.json", other)
    doc = json.loads((tmp_path / "m.json").read_text())
    doc["version"] = 99
    with pytest.raises(ValueError, match="version"):
        AnxietyEnsemble.from_dict(doc, ens.table)


def test_clone_shares_table(fitted):
    ens, _, _ = fitted
    c = clone(ens)
    assert c.table is ens.table and not hasattr(c, "term_weights_")


def test_unseen_terms_ignored(fitted):
    ens, _, _ = fitted
    vocab_free = "zzzunseen qqqunseen"
    assert occurrence_vector(tokenize(vocab_free))
    assert np.isfinite(ens.score_text(vocab_free))
