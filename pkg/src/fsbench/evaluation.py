"""Metrics, the relative performance gap, and the two aggregation views
(degree buckets and average ranks) used by every report."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .datasets import REGRESSION
from .shifts import Scenario

ACCURACY = "accuracy"
AUC = "auc"
RMSE = "rmse"

# Whether a larger metric value means better performance.
HIGHER_IS_BETTER = {ACCURACY: True, AUC: True, RMSE: False}

BUCKETS = (0.2, 0.4, 0.6, 0.8, 1.0)


def accuracy(predicted_labels, labels) -> float:
    """Fraction of exact label matches."""
    predicted_labels = np.asarray(predicted_labels)
    labels = np.asarray(labels)
    if predicted_labels.shape != labels.shape or predicted_labels.size == 0:
        raise ValueError("predictions and labels must be nonempty and equal-length")
    return float(np.mean(predicted_labels == labels))


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUC: probability a random positive outscores a random
    negative, ties counting one half. Computed from average ranks."""
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sv = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc(scores, labels, n_classes: int | None = None) -> float:
    """ROC-AUC from per-class probability vectors.

    Binary tasks reduce to the Mann-Whitney statistic on the positive-class
    score; multiclass tasks macro-average one-vs-rest AUCs over the classes
    present, skipping (with a warning) classes that have no positives or no
    negatives in ``labels``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0] or scores.shape[0] == 0:
        raise ValueError("scores must be an (n, classes) matrix aligned with labels")
    if n_classes is None:
        n_classes = scores.shape[1]

    terms = []
    skipped = []
    for c in range(n_classes):
        positive = labels == c
        if positive.all() or not positive.any():
            skipped.append(c)
            continue
        terms.append(_binary_auc(scores[:, c], positive))
    if skipped:
        warnings.warn(f"roc_auc: skipped one-vs-rest terms for class(es) {skipped} "
                      "absent a positive/negative pair")
    if not terms:
        raise ValueError("roc_auc undefined: no class has both positives and negatives")
    return float(np.mean(terms))


def rmse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise ValueError("predictions and targets must be nonempty and equal-length")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


def performance_gap(metric_i: float, metric_0: float) -> float:
    """Relative gap (metric_i - metric_0) / metric_0.

    The sign is never flipped: on error metrics like RMSE a positive gap
    means degradation, so report orientation alongside the value.
    """
    if metric_0 == 0.0:
        raise ValueError("performance gap undefined for a zero reference metric")
    return (metric_i - metric_0) / metric_0


def aggregate_random(values) -> float:
    """Mean performance across the subsets of one random-shift degree."""
    values = list(values)
    if not values:
        raise ValueError("no values to aggregate")
    return float(np.mean(values))


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated (dataset, model, scenario, subset, metric) cell."""

    dataset: str
    model: str
    task: str
    scenario: Scenario
    degree: float
    n_removed: int
    subset: tuple[int, ...]
    metric_name: str
    metric_0: float
    metric_i: float
    delta: float | None  # None when metric_0 == 0 leaves the gap undefined

    def with_metric(self, metric_name, metric_0, metric_i) -> "EvalRecord":
        delta = None
        if metric_0 != 0.0:
            delta = performance_gap(metric_i, metric_0)
        return replace(self, metric_name=metric_name, metric_0=metric_0,
                       metric_i=metric_i, delta=delta)


def make_record(dataset, model, task, scenario, degree, n_removed, subset,
                metric_name, metric_0, metric_i) -> EvalRecord:
    delta = performance_gap(metric_i, metric_0) if metric_0 != 0.0 else None
    return EvalRecord(dataset=dataset, model=model, task=task, scenario=scenario,
                      degree=degree, n_removed=n_removed, subset=tuple(subset),
                      metric_name=metric_name, metric_0=metric_0,
                      metric_i=metric_i, delta=delta)


def degree_bucket(degree: float) -> float:
    """Nearest coarse bucket in {0.2, 0.4, 0.6, 0.8, 1.0}, ties upward.

    Distances are rounded to 12 decimals first so that decimal ties like
    0.3 (equidistant from 0.2 and 0.4 in exact arithmetic) resolve upward
    instead of following float subtraction noise."""
    return min(BUCKETS, key=lambda b: (round(abs(degree - b), 12), -b))


@dataclass(frozen=True)
class BucketCell:
    task: str
    model: str
    metric_name: str
    bucket: float
    mean_delta: float
    count: int


def bucket_degrees(records) -> list[BucketCell]:
    """Assign each record to its nearest degree bucket and average the gap
    per (task, model, metric, bucket). Records with an undefined gap are
    excluded."""
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        if rec.delta is None:
            continue
        key = (rec.task, rec.model, rec.metric_name, degree_bucket(rec.degree))
        groups.setdefault(key, []).append(rec.delta)
    return [
        BucketCell(task=k[0], model=k[1], metric_name=k[2], bucket=k[3],
                   mean_delta=float(np.mean(v)), count=len(v))
        for k, v in sorted(groups.items())
    ]


def _ranking_metric(task: str) -> str:
    return RMSE if task == REGRESSION else ACCURACY


def _average_rank_values(values: dict, higher_better: bool) -> dict:
    """Rank models by value (average ranks on ties)."""
    models = sorted(values)
    keyed = sorted(models, key=lambda m: (-values[m] if higher_better else values[m], m))
    ranks: dict = {}
    i = 0
    while i < len(keyed):
        j = i
        while j + 1 < len(keyed) and values[keyed[j + 1]] == values[keyed[i]]:
            j += 1
        for m in keyed[i:j + 1]:
            ranks[m] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankRow:
    task: str
    bucket: float  # 0.0 is the closed-environment row
    model: str
    rank: float
    n_datasets: int


@dataclass(frozen=True)
class RankTable:
    rows: tuple[RankRow, ...]
    overall: tuple[tuple[str, float], ...]  # (model, average rank over all cells)


def average_rank(records) -> RankTable:
    """Rank models within each (task, dataset, bucket) cell by the task's
    headline metric (accuracy for classification, RMSE for regression), then
    average ranks across datasets per task and across all cells overall.

    Records with ``n_removed == 0`` form the 0% (closed-environment) row.
    Models missing from a cell are excluded from it with a warning.
    """
    cells: dict[tuple, dict[str, list[float]]] = {}
    for rec in records:
        if rec.metric_name != _ranking_metric(rec.task):
            continue
        bucket = 0.0 if rec.n_removed == 0 else degree_bucket(rec.degree)
        key = (rec.task, rec.dataset, bucket)
        cells.setdefault(key, {}).setdefault(rec.model, []).append(rec.metric_i)

    all_models = sorted({m for per_model in cells.values() for m in per_model})
    incomplete = [key for key, per_model in cells.items()
                  if len(per_model) < len(all_models)]
    if incomplete:
        warnings.warn(f"average_rank: {len(incomplete)} cell(s) missing some models; "
                      "missing models are excluded from those cells")

    per_task_bucket: dict[tuple, dict[str, list[float]]] = {}
    for (task, _dataset, bucket), per_model in cells.items():
        means = {m: float(np.mean(v)) for m, v in per_model.items()}
        ranks = _average_rank_values(means, HIGHER_IS_BETTER[_ranking_metric(task)])
        for m, r in ranks.items():
            per_task_bucket.setdefault((task, bucket), {}).setdefault(m, []).append(r)

    rows = []
    overall: dict[str, list[float]] = {}
    for (task, bucket) in sorted(per_task_bucket):
        for m, rank_list in sorted(per_task_bucket[(task, bucket)].items()):
            mean_rank = float(np.mean(rank_list))
            rows.append(RankRow(task=task, bucket=bucket, model=m,
                                rank=mean_rank, n_datasets=len(rank_list)))
            overall.setdefault(m, []).append(mean_rank)
    overall_pairs = tuple((m, float(np.mean(v))) for m, v in sorted(overall.items()))
    return RankTable(rows=tuple(rows), overall=overall_pairs)
