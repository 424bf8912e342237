"""Feature-target correlation statistics and the ascending-|rho| ranking.

The ranking produced here decides which features every shift scenario
removes first, so all estimators are deterministic, tolerate constant
(degenerate) columns, and break ties by feature index.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import CATEGORICAL, CLASSIFICATION_TASKS, Dataset, encode

PEARSON = "pearson"
SPEARMAN = "spearman"
MUTUAL_INFORMATION = "mutual_information"

METHODS = (PEARSON, SPEARMAN, MUTUAL_INFORMATION)

# |rho| above this counts as at least a moderate linear correlation and is
# flagged on the feature's score.
MODERATE_THRESHOLD = 0.7

DEFAULT_BINS = 10


def pearson(x, y) -> float:
    """Linear correlation: covariance over the product of standard
    deviations, with population moments.

    A zero-variance argument yields the defined-degenerate value 0.0 (use
    :func:`pearson_flagged` to observe the degeneracy); shifted or imputed
    columns are constant by construction and must still be rankable.
    """
    return pearson_flagged(x, y)[0]


def pearson_flagged(x, y) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(np.mean(xc * xc)))
    sy = math.sqrt(float(np.mean(yc * yc)))
    if sx == 0.0 or sy == 0.0:
        return 0.0, True
    rho = float(np.mean(xc * yc)) / (sx * sy)
    return max(-1.0, min(1.0, rho)), False


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """Fractional ranks starting at 1, ties averaged."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: Pearson applied to average-rank transforms."""
    return spearman_flagged(x, y)[0]


def spearman_flagged(x, y) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    return pearson_flagged(_average_ranks(x), _average_ranks(y))


def _equal_width_bins(v: np.ndarray, bins: int) -> np.ndarray:
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        return np.zeros(v.size, dtype=np.int64)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def mutual_information(x, y, bins: int = DEFAULT_BINS, *,
                       x_discrete: bool = False, y_discrete: bool = True) -> float:
    """Histogram mutual information in nats.

    Continuous arguments are discretized into ``bins`` equal-width bins;
    discrete arguments (category codes, class labels) are used as-is.
    Degenerate single-bin input gives 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    if bins < 2:
        raise ValueError("bins must be >= 2")

    a = _as_codes(x) if x_discrete else _equal_width_bins(x, bins)
    b = _as_codes(y) if y_discrete else _equal_width_bins(y, bins)
    n = a.size
    joint = np.zeros((int(a.max()) + 1, int(b.max()) + 1), dtype=np.float64)
    np.add.at(joint, (a, b), 1.0)
    joint /= n
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mask = joint > 0
    outer = pa[:, None] * pb[None, :]
    mi = float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))
    return max(0.0, mi)


def _as_codes(v: np.ndarray) -> np.ndarray:
    _, codes = np.unique(v, return_inverse=True)
    return codes.astype(np.int64)


def kendall_tau(rank_a, rank_b) -> float:
    """tau-a concordance between two permutations of the same index set:
    (concordant - discordant) pairs over C(n, 2)."""
    rank_a = list(rank_a)
    rank_b = list(rank_b)
    if sorted(rank_a) != sorted(rank_b) or len(set(rank_a)) != len(rank_a):
        raise ValueError("arguments must be permutations of the same index set")
    n = len(rank_a)
    if n < 2:
        raise ValueError("need at least 2 items")
    pos_b = {item: i for i, item in enumerate(rank_b)}
    pa = np.arange(n, dtype=np.float64)
    pb = np.asarray([pos_b[item] for item in rank_a], dtype=np.float64)
    da = np.sign(pa[:, None] - pa[None, :])
    db = np.sign(pb[:, None] - pb[None, :])
    iu = np.triu_indices(n, k=1)
    concordance = float(np.sum(da[iu] * db[iu]))
    return concordance / math.comb(n, 2)


@dataclass(frozen=True)
class FeatureScore:
    feature_index: int
    rho: float
    abs_rho: float
    method: str
    degenerate: bool = False  # zero-variance input, rho forced to 0
    moderate: bool = False    # |rho| > 0.7


@dataclass(frozen=True)
class ImportanceRanking:
    """Per-feature scores plus the ascending-|rho| removal order."""

    method: str
    scores: tuple[FeatureScore, ...]
    order: tuple[int, ...]  # feature indices, ascending |rho|, ties by index

    @property
    def n_features(self) -> int:
        return len(self.scores)

    def score_of(self, feature_index: int) -> FeatureScore:
        return self.scores[feature_index]


def rank_features(train: Dataset, method: str = PEARSON,
                  bins: int = DEFAULT_BINS) -> ImportanceRanking:
    """Score every feature against the target and order them by ascending
    absolute correlation (ties by ascending feature index).

    Categorical features enter through their sorted-order integer codes,
    mirroring the target encoding.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    X, y, _ = encode(train)
    y = np.asarray(y, dtype=np.float64)
    y_discrete = train.task in CLASSIFICATION_TASKS

    scores = []
    for j, col in enumerate(train.feature_columns):
        x = X[:, j]
        if method == PEARSON:
            rho, degenerate = pearson_flagged(x, y)
        elif method == SPEARMAN:
            rho, degenerate = spearman_flagged(x, y)
        else:
            rho = mutual_information(x, y, bins=bins,
                                     x_discrete=(col.kind == CATEGORICAL),
                                     y_discrete=y_discrete)
            degenerate = float(np.ptp(x)) == 0.0 or float(np.ptp(y)) == 0.0
        abs_rho = abs(rho)
        scores.append(FeatureScore(feature_index=j, rho=rho, abs_rho=abs_rho,
                                   method=method, degenerate=degenerate,
                                   moderate=abs_rho > MODERATE_THRESHOLD))

    order = tuple(sorted(range(len(scores)), key=lambda i: (scores[i].abs_rho, i)))
    return ImportanceRanking(method=method, scores=tuple(scores), order=order)


def correlation_matrix(dataset: Dataset):
    """Pairwise Pearson matrix over every encoded column, target last.

    Returns ``(names, matrix)``; the final column holds each feature's
    correlation with the target, matching the heat-map layout."""
    X, y, _ = encode(dataset)
    cols = [X[:, j] for j in range(X.shape[1])] + [np.asarray(y, dtype=np.float64)]
    names = [c.name for c in dataset.columns]
    k = len(cols)
    matrix = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            matrix[i, j] = matrix[j, i] = pearson(cols[i], cols[j])
    return names, matrix


def ranking_to_csv(ranking: ImportanceRanking, dataset: Dataset, path) -> Path:
    """Write (feature, rho, abs_rho, rank) rows, one per feature."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rank_of = {idx: pos + 1 for pos, idx in enumerate(ranking.order)}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "rho", "abs_rho", "rank", "degenerate", "moderate"])
        for score in ranking.scores:
            writer.writerow([
                dataset.columns[score.feature_index].name,
                repr(score.rho), repr(score.abs_rho),
                rank_of[score.feature_index],
                int(score.degenerate), int(score.moderate),
            ])
    return path


def correlation_matrix_to_csv(dataset: Dataset, path) -> Path:
    """Square correlation CSV (header row and column) for heat-map plotting."""
    names, matrix = correlation_matrix(dataset)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + names)
        for name, row in zip(names, matrix):
            writer.writerow([name] + [repr(float(v)) for v in row])
    return path
