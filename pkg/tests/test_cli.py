import hashlib
import json

import pytest

from anxiometer.cli import load_config, run

SMALL = json.dumps({"n_labeled": 90, "n_users": 25, "tweets_per_user": 8, "n_raters": 40})


def sha(p):
    return hashlib.sha256(p.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def out(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run(["synth", "--output", str(d), "--seed", "4", "--synth", SMALL], environ={}) == 0
    return d


def test_pipeline_smoke(out):
    for cmd in ("ingest", "labels", "train", "cv", "baseline", "score", "aggregate", "analyze"):
        assert run([cmd, "--output", str(out)], environ={}) == 0, cmd
    for name in ("corpus_stats.json", "rejections.csv", "icc.json", "tweet_labels.csv",
                 "label_hist.csv", "model.json", "term_index.csv", "cv_metrics.csv",
                 "error_hist.csv", "baseline_scatter.csv", "scored.csv", "scoring_report.json",
                 "aggregates.csv", "correlations.csv", "glm_report.json", "glm_report.txt"):
        assert (out / name).exists(), name
    rows = (out / "cv_metrics.csv").read_text().splitlines()
    assert rows[-1].startswith("pooled,90,")
    for kind in ("rater_dots", "ml_vs_human", "error_hist", "lexicon_vs_human", "user_timeline"):
        assert run(["plot", "--kind", kind, "--output", str(out)], environ={}) == 0
        assert (out / f"plot_{kind}.csv").exists()


def test_manifest_records_effective_values(out):
    assert run(["cv", "--output", str(out), "--folds", "3"], environ={"ANXIOMETER_FOLDS": "5",
                                                                        "ANXIOMETER_SEED": "9"}) == 0
    man = json.loads((out / "manifest_cv.json").read_text())
    assert man["config"]["folds"] == 3 and man["config"]["seed"] == 9
    assert man["inputs"]["embeddings"]["sha256"] == sha(out / "embeddings.txt")
    assert "numpy" in man["versions"]
    assert man["outputs"]["cv_metrics.csv"] == sha(out / "cv_metrics.csv")


def test_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 1, "fit": {"tol": 0.5}, "scorer": {"shards": 3}}))
    c = load_config(str(cfg), {}, environ={})
    assert (c.seed, c.tol, c.shards) == (1, 0.5, 3)
    c = load_config(str(cfg), {"seed": 7}, environ={"ANXIOMETER_SEED": "5", "ANXIOMETER_TOL": "0.1"})
    assert (c.seed, c.tol) == (7, 0.1)
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(["labels", "--config", str(cfg), "--output", str(tmp_path)], environ={}) == 1


def test_shard_count_does_not_change_output(out, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["score", "--output", str(out), "--scored", str(a)], environ={}) == 0
    assert run(["score", "--output", str(out), "--scored", str(b), "--shards", "4"], environ={}) == 0
    assert sha(a) == sha(b)


def test_missing_input_fails_before_work(out, tmp_path, capsys):
    dest = tmp_path / "fresh"
    code = run(["train", "--output", str(out), "--embeddings", str(tmp_path / "nope.txt"),
                "--model", str(dest / "m.json")], environ={})
    err = capsys.readouterr().err.strip()
    assert code == 1 and not dest.exists()
    assert len(err.splitlines()) == 1 and err.startswith("anxiometer: error: train: missing input")


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run(["train", "--no-such-flag"], environ={})
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["plot", "--kind", "pie", "--output", "x"], environ={})
    assert exc.value.code == 2


def test_help_documents_env_prefix(capsys):
    with pytest.raises(SystemExit):
        run(["--help"])
    assert "ANXIOMETER_" in capsys.readouterr().out
