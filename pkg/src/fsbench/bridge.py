"""File-based protocol for evaluating external programs as models.

The harness writes a train CSV (target last) and a test CSV (no target
column), then invokes

    command <train_file> <test_file> <predictions_file> <task>

On exit 0 the predictions file must contain, in test row order: a single
``prediction`` column for regression, or a ``label`` column plus one
``p_<class>`` column per train class for classification. Files on disk keep
the contract cross-language and auditable.
"""
from __future__ import annotations

import csv
import os
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import CLASSIFICATION_TASKS, Dataset, format_value
from .models import Prediction

DEFAULT_TIMEOUT = 600.0

PROB_TOLERANCE = 1e-6


class BridgeError(RuntimeError):
    """External model violated the bridge contract."""


@dataclass
class BridgeJob:
    command: str
    workdir: Path
    train_file: Path
    test_file: Path
    predictions_file: Path
    task: str
    timeout: float = DEFAULT_TIMEOUT
    env: dict = field(default_factory=dict)  # extra environment, e.g. FSBENCH_SEED


def _write_bridge_csv(dataset: Dataset, path: Path, include_target: bool) -> None:
    columns = dataset.columns if include_target else dataset.feature_columns
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in columns])
        kinds = [c.kind for c in columns]
        for row in dataset.rows:
            cells = row if include_target else row[:-1]
            writer.writerow([format_value(v, k) for v, k in zip(cells, kinds)])


def bridge_evaluate(job: BridgeJob, train: Dataset, test: Dataset) -> list[Prediction]:
    """Run one external-model job and parse its predictions.

    Probability rows are validated against the simplex to 1e-6 and then
    renormalized exactly; labels must be train classes. Any contract
    violation raises :class:`BridgeError` with a diagnostic.
    """
    if train.task != test.task:
        raise BridgeError("train and test tasks differ")
    # resolve before handing over: the child runs with cwd=workdir, where
    # caller-relative paths would no longer point at the right files
    train_file = Path(job.train_file).resolve()
    test_file = Path(job.test_file).resolve()
    predictions_file = Path(job.predictions_file).resolve()
    _write_bridge_csv(train, train_file, include_target=True)
    _write_bridge_csv(test, test_file, include_target=False)
    predictions_file.parent.mkdir(parents=True, exist_ok=True)

    argv = shlex.split(job.command) + [str(train_file), str(test_file),
                                       str(predictions_file), job.task]
    env = dict(os.environ)
    env.update({k: str(v) for k, v in job.env.items()})
    try:
        proc = subprocess.run(argv, capture_output=True, text=True,
                              timeout=job.timeout, cwd=str(job.workdir), env=env)
    except FileNotFoundError as exc:
        raise BridgeError(f"command not executable: {argv[0]!r} ({exc})") from exc
    except subprocess.TimeoutExpired as exc:
        raise BridgeError(f"adapter timed out after {job.timeout}s") from exc
    if proc.returncode != 0:
        raise BridgeError(f"adapter exited with status {proc.returncode}; "
                          f"stderr: {proc.stderr.strip()[:2000]}")

    return _parse_predictions(predictions_file, train, test.n_rows)


def _parse_predictions(path: Path, train: Dataset, n_rows: int) -> list[Prediction]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise BridgeError(f"{path}: empty predictions file") from None
            rows = [row for row in reader if row]
    except OSError as exc:
        raise BridgeError(f"{path}: unreadable predictions file ({exc})") from exc

    if len(rows) != n_rows:
        raise BridgeError(f"{path}: expected {n_rows} prediction rows "
                          f"(one per test row), found {len(rows)}")

    if train.task in CLASSIFICATION_TASKS:
        classes = sorted(set(train.column_values(train.target_index)))
        expected = ["label"] + [f"p_{c}" for c in classes]
        if sorted(header) != sorted(expected):
            raise BridgeError(f"{path}: classification header must be {expected}, "
                              f"found {header}")
        col = {name: i for i, name in enumerate(header)}
        code_of = {label: i for i, label in enumerate(classes)}
        out = []
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise BridgeError(f"{path}: row {i + 2} has {len(row)} cells, "
                                  f"expected {len(header)}")
            label = row[col["label"]]
            if label not in code_of:
                raise BridgeError(f"{path}: row {i + 2} predicts unknown label {label!r}")
            try:
                probs = [float(row[col[f"p_{c}"]]) for c in classes]
            except ValueError as exc:
                raise BridgeError(f"{path}: row {i + 2} has a non-numeric probability") from exc
            total = sum(probs)
            if any(p < -PROB_TOLERANCE for p in probs) or abs(total - 1.0) > PROB_TOLERANCE:
                raise BridgeError(f"{path}: row {i + 2} probabilities off the simplex "
                                  f"(sum={total!r})")
            probs = [max(p, 0.0) for p in probs]
            total = sum(probs)
            out.append(Prediction(label=code_of[label],
                                  probs=tuple(p / total for p in probs)))
        return out

    if header != ["prediction"]:
        raise BridgeError(f"{path}: regression header must be ['prediction'], found {header}")
    out = []
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise BridgeError(f"{path}: row {i + 2} has {len(row)} cells, expected 1")
        try:
            out.append(Prediction(value=float(row[0])))
        except ValueError as exc:
            raise BridgeError(f"{path}: row {i + 2} has a non-numeric prediction") from exc
    return out
