"""Command-line entry point: one subcommand per pipeline stage.

Effective settings are resolved as built-in defaults < ``--config`` JSON
file < ``ANXIOMETER_*`` environment variables < command-line flags, and
recorded in a per-run manifest under the output directory.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__

ENV_PREFIX = "ANXIOMETER_"

SUBCOMMANDS = ("ingest", "labels", "train", "cv", "baseline", "score", "aggregate",
               "analyze", "plot", "synth")

# path key -> default file name under the output directory
DEFAULT_FILES = {
    "corpus": "corpus.jsonl",
    "labeled_corpus": "labeled.jsonl",
    "labels": "labels.csv",
    "embeddings": "embeddings.txt",
    "dictionary": "dictionary.csv",
    "model": "model.json",
    "scored": "scored.csv",
}

# inputs each stage needs before doing any work
REQUIRED_INPUTS = {
    "synth": (),
    "ingest": ("corpus",),
    "labels": ("labels",),
    "train": ("labeled_corpus", "labels", "embeddings"),
    "cv": ("labeled_corpus", "labels", "embeddings"),
    "baseline": ("labeled_corpus", "labels", "dictionary"),
    "score": ("corpus", "embeddings", "model"),
    "aggregate": ("scored", "corpus"),
    "analyze": ("scored", "corpus"),
    "plot": (),
}


class StageError(Exception):
    pass


@dataclass
class PipelineConfig:
    output: str = "anxiometer-out"
    corpus: str | None = None
    labeled_corpus: str | None = None
    labels: str | None = None
    embeddings: str | None = None
    dictionary: str | None = None
    model: str | None = None
    scored: str | None = None
    seed: int = 0
    tol: float = 1e-4
    max_iters: int = 300
    folds: int = 6
    max_features: int | None = None
    clamp: bool = False
    shards: int = 1
    jobs: int = 1
    window: str = "12m"
    min_tweets: int = 2
    robust: bool = False
    drop_retweets: bool = False
    drop_replies: bool = False
    unique_text: bool = False
    kind: str | None = None
    users: str | None = None
    start: str | None = None
    end: str | None = None
    bins: int = 20
    synth: dict = field(default_factory=dict)

    def path(self, key: str) -> str:
        value = getattr(self, key)
        return value if value else os.path.join(self.output, DEFAULT_FILES[key])


# config-file sections are flattened; these names are accepted as section keys
_SECTIONS = ("paths", "fit", "scorer", "analysis", "filter", "plot")


def _coerce(name: str, raw):
    ftype = {f.name: f.type for f in fields(PipelineConfig)}[name]
    if raw is None:
        return None
    if "bool" in ftype:
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if "int" in ftype and "float" not in ftype:
        return int(raw)
    if "float" in ftype:
        return float(raw)
    if ftype.startswith("dict"):
        return json.loads(raw) if isinstance(raw, str) else dict(raw)
    return str(raw)


def load_config(path: str | None, overrides: dict, environ=None) -> PipelineConfig:
    values: dict = {}
    names = {f.name for f in fields(PipelineConfig)}
    if path:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise StageError("config file must hold a JSON object")
        for key, val in doc.items():
            if key in _SECTIONS and isinstance(val, dict):
                for k2, v2 in val.items():
                    if k2 not in names:
                        raise StageError(f"unknown config key {key}.{k2}")
                    values[k2] = v2
            elif key in names:
                values[key] = val
            else:
                raise StageError(f"unknown config key {key}")
    env = os.environ if environ is None else environ
    for name in names:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = PipelineConfig()
    for k, v in values.items():
        setattr(cfg, k, _coerce(k, v))
    return cfg


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import scipy
    import sklearn

    return {"anxiometer": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}


def _write_manifest(cfg: PipelineConfig, command: str, inputs: dict, outputs: list[str]) -> str:
    effective = asdict(cfg)
    canon = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    doc = {
        "subcommand": command,
        "config": effective,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.seed,
        "inputs": {k: {"path": p, "sha256": _sha256(p)} for k, p in inputs.items()},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs if os.path.exists(p)},
        "versions": _versions(),
    }
    path = os.path.join(cfg.output, f"manifest_{command}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _out(cfg, name):
    return os.path.join(cfg.output, name)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _epoch_arg(value: str | None, end_of_day: bool = False) -> int | None:
    if value is None:
        return None
    from .corpus import parse_timestamp

    ts = parse_timestamp(value)
    if end_of_day and len(value.strip()) == 10:
        ts += 86399
    return ts


def _labeled_set(cfg):
    """Texts and mean labels of the labeled tweets, in label-file order."""
    from .corpus import read_jsonl
    from .labels import aggregate_labels, load_labels

    observations = load_labels(cfg.path("labels"))
    labels = aggregate_labels(observations)
    texts = {r.tweet_id: r.text for r in read_jsonl(cfg.path("labeled_corpus"))}
    missing = [lab.tweet_id for lab in labels if lab.tweet_id not in texts]
    if missing:
        raise StageError(f"{len(missing)} labeled tweet ids absent from labeled corpus, e.g. {missing[0]}")
    ids = [lab.tweet_id for lab in labels]
    return ids, [texts[i] for i in ids], np.array([lab.mean_anxiety for lab in labels]), labels


# ---- stages -----------------------------------------------------------------

def cmd_synth(cfg):
    from .synth import SynthConfig, generate_synthetic

    world = generate_synthetic(SynthConfig.from_dict(cfg.synth), seed=cfg.seed)
    paths = world.write(cfg.output)
    return {}, list(paths.values())


def cmd_ingest(cfg):
    from .corpus import filter_corpus, ingest, stats, write_jsonl, write_rejections

    result = ingest(cfg.path("corpus"))
    out_stats, out_rej = _out(cfg, "corpus_stats.json"), _out(cfg, "rejections.csv")
    window = None
    if cfg.start or cfg.end:
        window = (_epoch_arg(cfg.start) if cfg.start else -(2**62),
                  _epoch_arg(cfg.end, end_of_day=True) if cfg.end else 2**62)
    kept = filter_corpus(result.records, cfg.drop_retweets, cfg.drop_replies, cfg.unique_text, window)
    doc = {"input": stats(result.records).as_dict(), "filtered": stats(kept).as_dict(),
           "n_rejected": len(result.rejections), "n_duplicates": result.n_duplicates}
    _write_json(out_stats, doc)
    write_rejections(result, out_rej)
    out_filtered = _out(cfg, "filtered.jsonl")
    write_jsonl(kept, out_filtered)
    return {"corpus": cfg.path("corpus")}, [out_stats, out_rej, out_filtered]


def cmd_labels(cfg):
    from .labels import aggregate_labels, cronbach_alpha, icc_oneway, label_distribution, load_labels

    obs = load_labels(cfg.path("labels"))
    labs = aggregate_labels(obs)
    out_labels = _out(cfg, "tweet_labels.csv")
    with open(out_labels, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "mean_anxiety", "n_raters"])
        for lab in labs:
            w.writerow([lab.tweet_id, repr(lab.mean_anxiety), lab.n_raters])
    icc = icc_oneway(obs)
    doc = icc.as_dict()
    try:
        doc["cronbach_alpha"] = cronbach_alpha([o.items for o in obs])
    except ValueError:
        doc["cronbach_alpha"] = None
    dist = label_distribution(labs)
    doc["distribution"] = {"min": dist.min, "max": dist.max, "mean": dist.mean, "sd": dist.sd,
                           "balanced": dist.balanced}
    out_icc, out_hist = _out(cfg, "icc.json"), _out(cfg, "label_hist.csv")
    _write_json(out_icc, doc)
    with open(out_hist, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "count"])
        w.writerows([repr(a), repr(b), c] for a, b, c in dist.rows())
    return {"labels": cfg.path("labels")}, [out_labels, out_icc, out_hist]


def cmd_train(cfg):
    from .ensemble import AnxietyEnsemble, save_ensemble
    from .features import load_embeddings, write_term_index

    table = load_embeddings(cfg.path("embeddings"))
    _, texts, y, _ = _labeled_set(cfg)
    ens = AnxietyEnsemble(table, max_iter=cfg.max_iters, tol=cfg.tol,
                          max_features=cfg.max_features).fit(texts, y)
    model_path = cfg.path("model")
    os.makedirs(os.path.dirname(os.path.abspath(model_path)), exist_ok=True)
    save_ensemble(ens, model_path)
    terms = _out(cfg, "term_index.csv")
    write_term_index(ens.vocabulary_, terms)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["train"]}
    return inputs, [model_path, terms]


def cmd_cv(cfg):
    from .ensemble import AnxietyEnsemble
    from .features import load_embeddings
    from .metrics import cross_validate, error_histogram, write_metrics_csv

    table = load_embeddings(cfg.path("embeddings"))
    ids, texts, y, _ = _labeled_set(cfg)
    est = AnxietyEnsemble(table, max_iter=cfg.max_iters, tol=cfg.tol, max_features=cfg.max_features)
    res = cross_validate(est, texts, y, k=cfg.folds, seed=cfg.seed)
    out_metrics = _out(cfg, "cv_metrics.csv")
    write_metrics_csv(res, out_metrics)
    out_pred = _out(cfg, "cv_predictions.csv")
    with open(out_pred, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "fold", "human", "machine", "residual"])
        for i, tid in enumerate(ids):
            w.writerow([tid, int(res.fold_of[i]), repr(float(y[i])),
                        repr(float(res.predictions[i])), repr(float(res.residuals[i]))])
    out_hist = _out(cfg, "error_hist.csv")
    error_histogram(res.residuals, bins=cfg.bins).write_csv(out_hist)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["cv"]}
    return inputs, [out_metrics, out_pred, out_hist]


def cmd_baseline(cfg):
    from .lexicon import baseline_evaluate, load_dictionary, write_scatter
    from .metrics import write_metrics_csv

    dictionary = load_dictionary(cfg.path("dictionary"))
    ids, texts, y, _ = _labeled_set(cfg)
    res = baseline_evaluate(texts, y, dictionary, ids)
    out_metrics, out_scatter = _out(cfg, "baseline_metrics.csv"), _out(cfg, "baseline_scatter.csv")
    write_metrics_csv(res.report, out_metrics)
    write_scatter(res, out_scatter)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["baseline"]}
    return inputs, [out_metrics, out_scatter]


def cmd_score(cfg):
    from .corpus import read_jsonl
    from .ensemble import load_ensemble
    from .features import load_embeddings
    from .scorer import score_corpus, write_scored

    table = load_embeddings(cfg.path("embeddings"))
    ens = load_ensemble(cfg.path("model"), table)
    corpus = read_jsonl(cfg.path("corpus"))
    res = score_corpus(corpus, ens, clamp=cfg.clamp, n_shards=cfg.shards, n_jobs=cfg.jobs)
    out_scored = cfg.path("scored")
    write_scored(res.scored, out_scored)
    out_report = _out(cfg, "scoring_report.json")
    with open(out_report, "w", encoding="utf-8") as fh:
        fh.write(res.report.to_json() + "\n")
    out_excl = _out(cfg, "scoring_exclusions.csv")
    with open(out_excl, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "reason"])
        w.writerows(res.exclusions)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["score"]}
    return inputs, [out_scored, out_excl]


def _scored_and_profiles(cfg):
    from .corpus import read_jsonl, user_profiles
    from .scorer import read_scored

    return read_scored(cfg.path("scored")), user_profiles(read_jsonl(cfg.path("corpus")))


def _window(cfg):
    w = cfg.window
    if w and "," in w:
        a, b = w.split(",", 1)
        return (_epoch_arg(a), _epoch_arg(b, end_of_day=True))
    return w


def cmd_aggregate(cfg):
    from .analysis import aggregate_users, write_aggregates

    scored, profiles = _scored_and_profiles(cfg)
    aggs = aggregate_users(scored, profiles, window=_window(cfg), min_tweets=cfg.min_tweets)
    out = _out(cfg, "aggregates.csv")
    write_aggregates(aggs, out)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["aggregate"]}
    return inputs, [out]


def cmd_analyze(cfg):
    from .analysis import (
        CORR_COLUMNS,
        aggregate_users,
        correlations,
        fit_count_glm,
        tweet_table,
        write_glm_report,
    )

    scored, profiles = _scored_and_profiles(cfg)
    corr = correlations(tweet_table(scored, profiles), CORR_COLUMNS)
    out_corr = _out(cfg, "correlations.csv")
    corr.write_csv(out_corr)
    aggs = aggregate_users(scored, profiles, window=_window(cfg), min_tweets=cfg.min_tweets)
    fits = []
    for outcome in ("followers", "following"):
        for controls in (None, "total_tweet_count"):
            try:
                fits.append(fit_count_glm(aggs, outcome, controls, robust=cfg.robust))
            except ValueError as exc:
                raise StageError(f"{outcome} model: {exc}") from None
    out_json, out_txt = _out(cfg, "glm_report.json"), _out(cfg, "glm_report.txt")
    write_glm_report(fits, out_json, out_txt)
    inputs = {k: cfg.path(k) for k in REQUIRED_INPUTS["analyze"]}
    return inputs, [out_corr, out_json, out_txt]


def _read_csv_columns(path, *cols):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [[r[c] for r in rows] for c in cols]


def cmd_plot(cfg):
    from .analysis import PLOT_KINDS, emit_plot_data

    kind = cfg.kind
    if kind not in PLOT_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(PLOT_KINDS)}")
    out = _out(cfg, f"plot_{kind}.csv")
    inputs = {}
    if kind == "rater_dots":
        from .labels import aggregate_labels, load_labels

        inputs["labels"] = cfg.path("labels")
        emit_plot_data(kind, out, labels=aggregate_labels(load_labels(inputs["labels"])),
                       n_tweets=20, seed=cfg.seed)
    elif kind in ("ml_vs_human", "error_hist"):
        src = _out(cfg, "cv_predictions.csv")
        _require({"cv_predictions": src})
        inputs["cv_predictions"] = src
        ids, human, machine, resid = _read_csv_columns(src, "tweet_id", "human", "machine", "residual")
        if kind == "ml_vs_human":
            emit_plot_data(kind, out, tweet_ids=ids, human=np.array(human, dtype=float),
                           machine=np.array(machine, dtype=float))
        else:
            emit_plot_data(kind, out, residuals=np.array(resid, dtype=float), bins=cfg.bins)
    elif kind == "lexicon_vs_human":
        src = _out(cfg, "baseline_scatter.csv")
        _require({"baseline_scatter": src})
        inputs["baseline_scatter"] = src
        ids, human, lex = _read_csv_columns(src, "tweet_id", "human", "lexicon")
        emit_plot_data(kind, out, tweet_ids=ids, human=np.array(human, dtype=float),
                       lexicon=np.array(lex, dtype=float))
    else:
        from .scorer import read_scored

        _require({"scored": cfg.path("scored")})
        inputs["scored"] = cfg.path("scored")
        users = cfg.users.split(",") if cfg.users else None
        emit_plot_data(kind, out, scored=read_scored(inputs["scored"]), user_ids=users,
                       start=_epoch_arg(cfg.start), end=_epoch_arg(cfg.end, end_of_day=True))
    return inputs, [out]


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "labels": cmd_labels,
    "train": cmd_train,
    "cv": cmd_cv,
    "baseline": cmd_baseline,
    "score": cmd_score,
    "aggregate": cmd_aggregate,
    "analyze": cmd_analyze,
    "plot": cmd_plot,
}


class UsageError(Exception):
    pass


def _require(paths: dict) -> None:
    for name, p in paths.items():
        if not os.path.isfile(p):
            raise StageError(f"missing input {name}: {p}")


# ---- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    env_help = (f"Any setting can also come from an environment variable named {ENV_PREFIX}<KEY> "
                f"(e.g. {ENV_PREFIX}SEED=3, {ENV_PREFIX}EMBEDDINGS=/data/glove.txt). "
                "Precedence: defaults < --config < environment < flags.")
    parser = argparse.ArgumentParser(prog="anxiometer", description=__doc__.splitlines()[0],
                                     epilog=env_help)
    parser.add_argument("--version", action="version", version=f"anxiometer {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)

    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--output", help="output directory")

    def paths(p, *keys):
        for k in keys:
            p.add_argument("--" + k.replace("_", "-"), dest=k, metavar="PATH")

    def fit(p):
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iters", dest="max_iters", type=int)
        p.add_argument("--max-features", dest="max_features", type=int)

    def analysis(p):
        p.add_argument("--window", help="6m, 12m, all, or START,END dates")
        p.add_argument("--min-tweets", dest="min_tweets", type=int)

    help_ = {
        "synth": "generate a synthetic world with planted ground truth",
        "ingest": "validate a JSONL corpus, report statistics and rejections",
        "labels": "aggregate rater labels, compute ICC and label histogram",
        "train": "fit the two-model ensemble and write the model artifact",
        "cv": "k-fold cross-validation of the ensemble",
        "baseline": "evaluate the dictionary sentiment baseline",
        "score": "score a corpus with a trained model",
        "aggregate": "per-user trait anxiety over a window",
        "analyze": "correlations and Poisson count regressions",
        "plot": "emit plot data CSV",
    }
    p = {name: sub.add_parser(name, parents=[common], help=help_[name],
                              argument_default=argparse.SUPPRESS) for name in SUBCOMMANDS}
    paths(p["ingest"], "corpus")
    p["ingest"].add_argument("--drop-retweets", dest="drop_retweets", action="store_true")
    p["ingest"].add_argument("--drop-replies", dest="drop_replies", action="store_true")
    p["ingest"].add_argument("--unique-text", dest="unique_text", action="store_true")
    p["ingest"].add_argument("--start")
    p["ingest"].add_argument("--end")
    paths(p["labels"], "labels")
    for name in ("train", "cv"):
        paths(p[name], "labeled_corpus", "labels", "embeddings", "model")
        fit(p[name])
    p["cv"].add_argument("--folds", type=int)
    p["cv"].add_argument("--bins", type=int)
    paths(p["baseline"], "labeled_corpus", "labels", "dictionary")
    paths(p["score"], "corpus", "embeddings", "model", "scored")
    p["score"].add_argument("--clamp", action="store_true")
    p["score"].add_argument("--shards", type=int)
    p["score"].add_argument("--jobs", type=int)
    for name in ("aggregate", "analyze"):
        paths(p[name], "scored", "corpus")
        analysis(p[name])
    p["analyze"].add_argument("--robust", action="store_true")
    paths(p["plot"], "labels", "scored")
    p["plot"].add_argument("--kind", required=True)
    p["plot"].add_argument("--users", help="comma-separated user ids (user_timeline)")
    p["plot"].add_argument("--start")
    p["plot"].add_argument("--end")
    p["plot"].add_argument("--bins", type=int)
    p["synth"].add_argument("--synth", type=json.loads, help="inline JSON overriding generator settings")
    return parser


def run(argv=None, environ=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = load_config(config_path, args, environ)
        if cfg.shards < 1 or cfg.folds < 2 or cfg.jobs < 1:
            raise UsageError("--shards and --jobs must be >= 1, --folds >= 2")
        needed = {k: cfg.path(k) for k in REQUIRED_INPUTS[command]}
        _require(needed)
        os.makedirs(cfg.output, exist_ok=True)
        inputs, outputs = COMMANDS[command](cfg)
        _write_manifest(cfg, command, inputs, outputs)
    except UsageError as exc:
        parser.error(str(exc))
    except (StageError, ValueError, OSError, KeyError, FloatingPointError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"anxiometer: error: {command}: {msg}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
