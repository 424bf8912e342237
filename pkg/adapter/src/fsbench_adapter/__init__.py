"""Reference implementation of the fsbench bridge protocol.

One file, no framework: the point is to document how any external model
plugs into the harness. It wraps scikit-learn's gradient boosting and is
invoked as

    fsbench-adapter <train_csv> <test_csv> <predictions_csv> <task>

with <task> one of binary / multiclass / regression. The train CSV carries
the target as its last column; the test CSV has no target column. The
predictions CSV is written in test-row order: a single ``prediction``
column for regression, or ``label`` plus one ``p_<class>`` column per train
class (sorted label order) for classification. Determinism comes from the
FSBENCH_SEED environment variable (default 0).

Any schema violation or training failure prints a diagnostic to stderr and
exits 1.
"""
from __future__ import annotations

import csv
import math
import os
import sys

import numpy as np

TASKS = ("binary", "multiclass", "regression")


class AdapterError(Exception):
    pass


def _read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise AdapterError(f"{path}: empty file") from None
            rows = [row for row in reader if row]
    except OSError as exc:
        raise AdapterError(f"{path}: unreadable ({exc})") from exc
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise AdapterError(f"{path}: row {i + 2} has {len(row)} cells, "
                               f"expected {len(header)}")
    return header, rows


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def _encode_features(train_rows, test_rows, n_features):
    """Numeric columns pass through; other columns get sorted-label codes
    fitted on train, with unseen test labels mapped past the known range."""
    X_train = np.empty((len(train_rows), n_features))
    X_test = np.empty((len(test_rows), n_features))
    for j in range(n_features):
        train_col = [row[j] for row in train_rows]
        test_col = [row[j] for row in test_rows]
        if all(_is_number(v) for v in train_col + test_col):
            X_train[:, j] = [float(v) for v in train_col]
            X_test[:, j] = [float(v) for v in test_col]
        else:
            codes = {label: i for i, label in enumerate(sorted(set(train_col)))}
            X_train[:, j] = [codes[v] for v in train_col]
            X_test[:, j] = [codes.get(v, len(codes)) for v in test_col]
    return X_train, X_test


def adapter_main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 4:
        print("usage: fsbench-adapter <train_csv> <test_csv> <predictions_csv> <task>",
              file=sys.stderr)
        return 1
    train_path, test_path, predictions_path, task = argv
    try:
        if task not in TASKS:
            raise AdapterError(f"unknown task {task!r}; expected one of {TASKS}")
        if len({train_path, test_path, predictions_path}) != 3:
            raise AdapterError("train, test and predictions paths must be distinct")
        _run(train_path, test_path, predictions_path, task)
    except AdapterError as exc:
        print(f"fsbench-adapter: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # training failure, bad numerics, ...
        print(f"fsbench-adapter: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def _run(train_path, test_path, predictions_path, task):
    train_header, train_rows = _read_csv(train_path)
    test_header, test_rows = _read_csv(test_path)
    if len(train_header) < 2:
        raise AdapterError("train file needs at least one feature and a target")
    if test_header != train_header[:-1]:
        raise AdapterError("test columns must equal the train feature columns "
                           f"(train features {train_header[:-1]}, test {test_header})")
    if not train_rows:
        raise AdapterError("train file has no data rows")

    seed = int(os.environ.get("FSBENCH_SEED", "0"))
    n_features = len(train_header) - 1
    X_train, X_test = _encode_features(train_rows, test_rows, n_features)
    target = [row[-1] for row in train_rows]

    if task == "regression":
        if not all(_is_number(v) for v in target):
            raise AdapterError("regression target must be numeric")
        from sklearn.ensemble import GradientBoostingRegressor
        model = GradientBoostingRegressor(random_state=seed)
        model.fit(X_train, np.asarray(target, dtype=float))
        values = model.predict(X_test) if len(test_rows) else np.empty(0)
        _write_regression(predictions_path, values)
        return

    classes = sorted(set(target))
    if len(classes) == 1:
        # degenerate fallback: constant predictions, still the full schema
        labels = [classes[0]] * len(test_rows)
        probs = np.ones((len(test_rows), 1))
    else:
        from sklearn.ensemble import GradientBoostingClassifier
        model = GradientBoostingClassifier(random_state=seed)
        model.fit(X_train, np.asarray(target))
        if len(test_rows):
            raw = model.predict_proba(X_test)
            order = [list(model.classes_).index(c) for c in classes]
            probs = raw[:, order]
            labels = [classes[int(np.argmax(row))] for row in probs]
        else:
            probs = np.empty((0, len(classes)))
            labels = []
    _write_classification(predictions_path, classes, labels, probs)


def _write_regression(path, values):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction"])
        for v in values:
            writer.writerow([repr(float(v))])


def _write_classification(path, classes, labels, probs):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label"] + [f"p_{c}" for c in classes])
        for label, row in zip(labels, probs):
            total = float(np.sum(row))
            writer.writerow([label] + [repr(float(p) / total) for p in row])


def main() -> None:
    sys.exit(adapter_main())
