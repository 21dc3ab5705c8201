"""Multi-rater STAI-6 labels: item recoding, per-tweet means and agreement."""
from __future__ import annotations

import csv
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

__all__ = [
    "DEFAULT_REVERSED",
    "LabelObservation",
    "TweetLabel",
    "IccResult",
    "LabelDistribution",
    "rater_score",
    "aggregate_labels",
    "icc_oneway",
    "label_distribution",
    "cronbach_alpha",
    "load_labels",
    "write_labels",
]

# calm, relaxed, content in the six-item short-form ordering
DEFAULT_REVERSED = (True, False, False, True, True, False)

N_ITEMS = 6


@dataclass(frozen=True)
class LabelObservation:
    tweet_id: str
    rater_id: str
    items: tuple[int, int, int, int, int, int]

    def __post_init__(self):
        _check_items(self.items)


@dataclass(frozen=True)
class TweetLabel:
    tweet_id: str
    mean_anxiety: float
    n_raters: int
    rater_scores: tuple[float, ...]


@dataclass(frozen=True)
class IccResult:
    """One-way random-effects ICC(1) with its asymptotic standard error.

    ``flag`` is ``"non-positive"`` when the between-tweet mean square does
    not exceed the within-tweet one.
    """

    icc: float
    standard_error: float
    ci95: tuple[float, float]
    n_groups: int
    n_obs: int
    k0: float
    msb: float
    msw: float
    f_stat: float
    n_excluded_singletons: int = 0
    flag: str | None = None

    def as_dict(self) -> dict:
        return {
            "icc": self.icc,
            "standard_error": self.standard_error,
            "ci95_low": self.ci95[0],
            "ci95_high": self.ci95[1],
            "n_groups": self.n_groups,
            "n_obs": self.n_obs,
            "k0": self.k0,
            "msb": self.msb,
            "msw": self.msw,
            "f_stat": self.f_stat,
            "n_excluded_singletons": self.n_excluded_singletons,
            "flag": self.flag,
        }


@dataclass
class LabelDistribution:
    edges: np.ndarray
    counts: np.ndarray
    min: float
    max: float
    mean: float
    sd: float
    balanced: bool = field(default=False)

    def rows(self) -> list[tuple[float, float, int]]:
        return [
            (float(self.edges[i]), float(self.edges[i + 1]), int(self.counts[i]))
            for i in range(len(self.counts))
        ]


def _check_items(items) -> None:
    if len(items) != N_ITEMS:
        raise ValueError(f"expected {N_ITEMS} items, got {len(items)}")
    for v in items:
        if isinstance(v, bool) or v not in (1, 2, 3, 4):
            raise ValueError(f"item value {v!r} outside 1..4")


def rater_score(items: Sequence[int], reversed_mask: Sequence[bool] = DEFAULT_REVERSED) -> float:
    """Recode reversed items (v -> 5 - v) and return the item mean in [1, 4].

    >>> rater_score((1, 4, 3, 1, 2, 4), (True, False, False, True, True, False))
    3.6666666666666665
    """
    _check_items(items)
    if len(reversed_mask) != N_ITEMS:
        raise ValueError(f"reversed_mask must have {N_ITEMS} entries")
    total = sum(5 - v if rev else v for v, rev in zip(items, reversed_mask))
    return total / N_ITEMS


def aggregate_labels(
    observations: Iterable[LabelObservation],
    reversed_mask: Sequence[bool] = DEFAULT_REVERSED,
) -> list[TweetLabel]:
    """One label per tweet, in first-appearance order."""
    groups: OrderedDict[str, list[float]] = OrderedDict()
    seen = set()
    for obs in observations:
        key = (obs.tweet_id, obs.rater_id)
        if key in seen:
            raise ValueError(f"duplicate rating {key}")
        seen.add(key)
        groups.setdefault(obs.tweet_id, []).append(rater_score(obs.items, reversed_mask))
    return [
        TweetLabel(tid, float(np.mean(scores)), len(scores), tuple(scores))
        for tid, scores in groups.items()
    ]


def _group_scores(observations, reversed_mask) -> list[list[float]]:
    observations = list(observations)
    if observations and isinstance(next(iter(observations)), TweetLabel):
        return [list(lab.rater_scores) for lab in observations]
    return [list(lab.rater_scores) for lab in aggregate_labels(observations, reversed_mask)]


def icc_oneway(
    observations: Sequence[LabelObservation] | Sequence[TweetLabel],
    reversed_mask: Sequence[bool] = DEFAULT_REVERSED,
) -> IccResult:
    """Intraclass correlation under a one-way random-effects model.

    Tweets are the groups; each is scored by its own random subset of
    raters, so group sizes may differ. With ``N`` ratings over ``m``
    tweets,

        k0  = (N - sum(n_i**2) / N) / (m - 1)
        ICC = (MSB - MSW) / (MSB + (k0 - 1) * MSW)

    The standard error is Smith's (1956) large-sample approximation for
    unbalanced designs::

        Var = 2 (1 - r)^2 / k0^2 * ( (1 + r (k0 - 1))^2 / (N - m)
              + [ (m - 1)(1 - r)(1 + r (2 k0 - 1))
                  + r^2 (S2 - 2 S3 / N + S2^2 / N^2) ] / (m - 1)^2 )

    with ``S2 = sum(n_i**2)`` and ``S3 = sum(n_i**3)``; it reduces to
    Fisher's ``2 (1-r)^2 (1+(k-1)r)^2 / (k (k-1) (m-1))`` (to first order)
    when the design is balanced. The 95% interval is the Wald interval
    ``ICC +/- 1.96 SE``.

    Tweets with a single rating carry no within-tweet information and are
    dropped (their count is reported).
    """
    groups = _group_scores(observations, reversed_mask)
    kept = [g for g in groups if len(g) >= 2]
    n_single = len(groups) - len(kept)
    m = len(kept)
    if m < 2:
        raise ValueError("ICC needs at least two tweets with two or more ratings each")
    sizes = np.array([len(g) for g in kept], dtype=float)
    n_obs = float(sizes.sum())
    means = np.array([np.mean(g) for g in kept])
    grand = float(np.sum([np.sum(g) for g in kept]) / n_obs)
    ssb = float(np.sum(sizes * (means - grand) ** 2))
    ssw = float(sum(np.sum((np.asarray(g) - mu) ** 2) for g, mu in zip(kept, means)))
    msb = ssb / (m - 1)
    msw = ssw / (n_obs - m)
    s2 = float(np.sum(sizes**2))
    s3 = float(np.sum(sizes**3))
    k0 = (n_obs - s2 / n_obs) / (m - 1)

    denom = msb + (k0 - 1.0) * msw
    if denom == 0.0:
        raise ValueError("ICC undefined: no variance within or between tweets")
    r = (msb - msw) / denom
    f_stat = msb / msw if msw > 0 else math.inf

    var = (
        2.0 * (1.0 - r) ** 2 / k0**2
        * (
            (1.0 + r * (k0 - 1.0)) ** 2 / (n_obs - m)
            + ((m - 1) * (1.0 - r) * (1.0 + r * (2.0 * k0 - 1.0))
               + r**2 * (s2 - 2.0 * s3 / n_obs + s2**2 / n_obs**2)) / (m - 1) ** 2
        )
    )
    se = math.sqrt(max(var, 0.0))
    z = sps.norm.ppf(0.975)
    return IccResult(
        icc=float(r),
        standard_error=se,
        ci95=(float(r - z * se), float(r + z * se)),
        n_groups=m,
        n_obs=int(n_obs),
        k0=float(k0),
        msb=msb,
        msw=msw,
        f_stat=f_stat,
        n_excluded_singletons=n_single,
        flag="non-positive" if r <= 0 else None,
    )


def label_distribution(labels, bins: int = 12, lo: float = 1.0, hi: float = 4.0) -> LabelDistribution:
    """Fixed-width histogram of per-tweet labels over ``[lo, hi]``.

    ``balanced`` is set when every bin is occupied and the largest bin is
    less than twice the smallest.
    """
    values = np.asarray(
        [lab.mean_anxiety if isinstance(lab, TweetLabel) else lab for lab in labels],
        dtype=float,
    )
    if values.size == 0:
        raise ValueError("label_distribution needs at least one label")
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    occupied_min = counts.min()
    balanced = bool(occupied_min > 0 and counts.max() / occupied_min < 2)
    return LabelDistribution(
        edges=edges,
        counts=counts,
        min=float(values.min()),
        max=float(values.max()),
        mean=float(values.mean()),
        sd=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        balanced=balanced,
    )


def cronbach_alpha(item_matrix, reversed_mask: Sequence[bool] = DEFAULT_REVERSED) -> float:
    """Cronbach's alpha over a pooled (ratings x 6) item matrix after recoding."""
    X = np.asarray(item_matrix, dtype=float)
    if X.ndim != 2 or X.shape[1] != N_ITEMS or X.shape[0] < 2:
        raise ValueError("item_matrix must be (n >= 2, 6)")
    mask = np.asarray(reversed_mask, dtype=bool)
    X = np.where(mask, 5.0 - X, X)
    item_var = X.var(axis=0, ddof=1).sum()
    total_var = X.sum(axis=1).var(ddof=1)
    if total_var == 0:
        raise ValueError("alpha undefined for constant totals")
    k = X.shape[1]
    return float(k / (k - 1) * (1.0 - item_var / total_var))


LABEL_HEADER = ["tweet_id", "rater_id"] + [f"item{i}" for i in range(1, 7)]


def load_labels(path) -> list[LabelObservation]:
    """Read ``tweet_id,rater_id,item1..item6`` CSV rows."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(LABEL_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"label file missing columns: {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                items = tuple(int(row[f"item{i}"]) for i in range(1, 7))
                out.append(LabelObservation(row["tweet_id"], row["rater_id"], items))
            except ValueError as exc:
                raise ValueError(f"{os.fspath(path)}:{lineno}: {exc}") from None
    return out


def write_labels(observations: Iterable[LabelObservation], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABEL_HEADER)
        for obs in observations:
            w.writerow([obs.tweet_id, obs.rater_id, *obs.items])
