"""Deterministic report files: identical records always serialize to
byte-identical CSVs (sorted keys, ``repr`` floats, LF line endings)."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evaluation import EvalRecord, aggregate_random, average_rank, bucket_degrees

_BUCKET_LABELS = {0.2: "20%", 0.4: "40%", 0.6: "60%", 0.8: "80%", 1.0: "100%"}


def fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_key(rec: EvalRecord):
    return (rec.dataset, rec.model, rec.metric_name, rec.scenario.tag,
            rec.degree, rec.scenario.single_index or 0, rec.subset)


def write_results(records, path) -> Path:
    """One record per row, sorted by (dataset, model, metric, scenario,
    degree, subset)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "model", "task", "scenario", "degree",
                         "n_removed", "single_index", "subset", "metric",
                         "metric_0", "metric_i", "delta"])
        for rec in sorted(records, key=_record_key):
            writer.writerow([
                rec.dataset, rec.model, rec.task, rec.scenario.tag,
                fmt_cell(rec.degree), rec.n_removed,
                fmt_cell(rec.scenario.single_index),
                "|".join(str(i) for i in rec.subset),
                rec.metric_name, fmt_cell(rec.metric_0), fmt_cell(rec.metric_i),
                fmt_cell(rec.delta),
            ])
    return path


def write_gap_table(records, path) -> Path:
    """Bucketed mean gaps per (task, model, metric): one row per triple,
    one column per degree bucket. Baseline rows (nothing removed) are not
    bucketed."""
    cells = bucket_degrees([r for r in records if r.n_removed > 0])
    table: dict[tuple, dict[float, float]] = {}
    for cell in cells:
        table.setdefault((cell.task, cell.model, cell.metric_name), {})[cell.bucket] = cell.mean_delta
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "model", "metric"] + [_BUCKET_LABELS[b] for b in sorted(_BUCKET_LABELS)])
        for (task, model, metric), buckets in sorted(table.items()):
            writer.writerow([task, model, metric] +
                            [fmt_cell(buckets.get(b)) for b in sorted(_BUCKET_LABELS)])
    return path


def write_rank_table(records, path) -> Path:
    """Average model ranks per (task, bucket) plus the overall average-rank
    row; 0% is the closed-environment column."""
    table = average_rank(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "bucket", "model", "rank", "n_datasets"])
        for row in table.rows:
            label = "0%" if row.bucket == 0.0 else _BUCKET_LABELS[row.bucket]
            writer.writerow([row.task, label, row.model, fmt_cell(row.rank), row.n_datasets])
        for model, rank in table.overall:
            writer.writerow(["all", "average", model, fmt_cell(rank), ""])
    return path


def write_curve(records, path) -> Path:
    """Plot-ready rows: per (dataset, model, metric, scenario, degree) the
    mean metric over subsets, the mean gap, and the subset count."""
    groups: dict[tuple, list[EvalRecord]] = {}
    for rec in records:
        key = (rec.dataset, rec.model, rec.metric_name, rec.scenario.tag,
               rec.degree, rec.scenario.single_index or 0)
        groups.setdefault(key, []).append(rec)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "model", "metric", "scenario", "degree",
                         "single_index", "mean_metric", "mean_delta", "n_subsets"])
        for key, recs in sorted(groups.items()):
            dataset, model, metric, scenario, degree, single_index = key
            mean_metric = aggregate_random([r.metric_i for r in recs])
            deltas = [r.delta for r in recs if r.delta is not None]
            mean_delta = float(np.mean(deltas)) if deltas else None
            writer.writerow([dataset, model, metric, scenario, fmt_cell(degree),
                             single_index or "", fmt_cell(mean_metric),
                             fmt_cell(mean_delta), len(recs)])
    return path


def emit_reports(records, output_dir) -> dict[str, Path]:
    """Write the full bundle; byte-identical output for identical records."""
    records = list(records)
    if not records:
        raise ValueError("no records to report")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return {
        "results": write_results(records, output_dir / "results.csv"),
        "gap_table": write_gap_table(records, output_dir / "gap_table.csv"),
        "rank_table": write_rank_table(records, output_dir / "rank_table.csv"),
        "curve": write_curve(records, output_dir / "curve.csv"),
    }
