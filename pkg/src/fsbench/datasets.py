"""Tabular dataset loading, typing, splitting, encoding and export.

Everything downstream (importance ranking, shift planning, imputation,
models, evaluation) consumes the immutable :class:`Dataset` defined here.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

BINARY = "binary"
MULTICLASS = "multiclass"
REGRESSION = "regression"

CLASSIFICATION_TASKS = (BINARY, MULTICLASS)

# Cell values treated as missing at ingestion; affected rows are dropped.
MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "NaN", "nan", "NULL", "null"})

# Reserved code appended after the known labels for unseen test categories.
UNKNOWN_LABEL = "<unknown>"


class DatasetError(ValueError):
    """Raised for unusable input files or malformed dataset operations."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # NUMERIC or CATEGORICAL


@dataclass(frozen=True)
class Dataset:
    """A rectangular typed table whose last column is the prediction target.

    Rows hold floats for numeric columns and strings for categorical ones;
    no missing values survive ingestion. Instances are immutable and safe
    to share across workers.
    """

    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple, ...]
    task: str

    def __post_init__(self):
        if len(self.columns) < 2:
            raise DatasetError(f"{self.name}: need at least one feature and a target")
        if not self.rows:
            raise DatasetError(f"{self.name}: no rows")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DatasetError(f"{self.name}: row {i} has {len(row)} values, expected {width}")

    @property
    def target_index(self) -> int:
        return len(self.columns) - 1

    @property
    def n_features(self) -> int:
        return len(self.columns) - 1

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def feature_columns(self) -> tuple[Column, ...]:
        return self.columns[:-1]

    @property
    def target_column(self) -> Column:
        return self.columns[-1]

    def column_values(self, index: int) -> tuple:
        return tuple(row[index] for row in self.rows)

    def replace_rows(self, rows, name: str | None = None) -> "Dataset":
        return Dataset(name=name or self.name, columns=self.columns,
                       rows=tuple(tuple(r) for r in rows), task=self.task)


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    test: Dataset
    seed: int
    train_fraction: float


def infer_schema(raw_columns) -> list[str]:
    """Classify each column of string values: numeric iff every value parses
    as a finite real, categorical otherwise."""
    kinds = []
    for values in raw_columns:
        if not values:
            raise DatasetError("cannot infer a kind for an empty column")
        kinds.append(NUMERIC if all(_is_finite_real(v) for v in values) else CATEGORICAL)
    return kinds


def _is_finite_real(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def derive_task(target_kind: str, target_values) -> str:
    if target_kind == NUMERIC:
        return REGRESSION
    n_labels = len(set(target_values))
    if n_labels == 2:
        return BINARY
    if n_labels >= 3:
        return MULTICLASS
    raise DatasetError("categorical target has a single distinct label")


def load_csv(path, name: str | None = None, schema: list[str] | None = None) -> Dataset:
    """Load a comma-separated file (header row, UTF-8, RFC 4180 quoting).

    Rows containing missing cells are dropped. Column kinds are inferred
    unless an explicit ``schema`` (list of kind tags, one per column) is
    given. The last column is the target and fixes the task kind.
    """
    path = Path(path)
    if name is None:
        name = path.stem
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DatasetError(f"{path}: empty file") from None
            raw_rows = [row for row in reader if row]
    except OSError as exc:
        raise DatasetError(f"{path}: unreadable ({exc})") from exc

    if len(header) < 2:
        raise DatasetError(f"{path}: need at least 2 columns, found {len(header)}")
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")

    kept = [row for row in raw_rows
            if not any(cell.strip() in MISSING_TOKENS for cell in row)]
    if not kept:
        raise DatasetError(f"{path}: no usable rows after dropping missing cells")

    if schema is None:
        kinds = infer_schema([[row[j] for row in kept] for j in range(len(header))])
    else:
        if len(schema) != len(header):
            raise DatasetError(f"{path}: schema length {len(schema)} != {len(header)} columns")
        kinds = list(schema)

    typed = tuple(
        tuple(float(cell) if kind == NUMERIC else cell
              for cell, kind in zip(row, kinds))
        for row in kept
    )
    task = derive_task(kinds[-1], [row[-1] for row in typed])
    columns = tuple(Column(col, kind) for col, kind in zip(header, kinds))
    return Dataset(name=name, columns=columns, rows=typed, task=task)


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0) -> DataSplit:
    """Deterministic train/test partition: ``floor(fraction * n)`` train rows,
    stratified by target label for classification tasks.

    Stratification uses largest-remainder apportionment so the train count
    is exact; it falls back to an unstratified shuffle (with a warning) when
    any class has fewer than 2 members.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0,1), got {train_fraction}")
    n = dataset.n_rows
    if n < 2:
        raise DatasetError("need at least 2 rows to split")
    n_train = int(math.floor(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise DatasetError(f"fraction {train_fraction} leaves an empty split for {n} rows")

    import random as _random
    rng = _random.Random(seed)

    stratify = dataset.task in CLASSIFICATION_TASKS
    if stratify:
        by_label: dict = {}
        for i, row in enumerate(dataset.rows):
            by_label.setdefault(row[-1], []).append(i)
        if min(len(v) for v in by_label.values()) < 2:
            warnings.warn(f"{dataset.name}: a class has fewer than 2 rows; "
                          "splitting without stratification")
            stratify = False

    if stratify:
        labels = sorted(by_label)
        ideal = {lab: len(by_label[lab]) * n_train / n for lab in labels}
        counts = {lab: int(math.floor(ideal[lab])) for lab in labels}
        leftover = n_train - sum(counts.values())
        for lab in sorted(labels, key=lambda l: (-(ideal[l] - counts[l]), l))[:leftover]:
            counts[lab] += 1
        train_idx = []
        for lab in labels:
            members = list(by_label[lab])
            rng.shuffle(members)
            train_idx.extend(members[:counts[lab]])
    else:
        order = list(range(n))
        rng.shuffle(order)
        train_idx = order[:n_train]

    train_set = set(train_idx)
    train_rows = [dataset.rows[i] for i in range(n) if i in train_set]
    test_rows = [dataset.rows[i] for i in range(n) if i not in train_set]
    return DataSplit(
        train=dataset.replace_rows(train_rows, name=f"{dataset.name}[train]"),
        test=dataset.replace_rows(test_rows, name=f"{dataset.name}[test]"),
        seed=seed,
        train_fraction=train_fraction,
    )


@dataclass(frozen=True)
class Encoder:
    """Fitted categorical/target mapping, reusable on held-out rows.

    Feature labels map to integer codes in sorted label order; labels unseen
    at fit time map to the reserved code ``len(known labels)``. Classification
    targets are encoded the same way, regression targets pass through.
    """

    columns: tuple[Column, ...]
    task: str
    feature_maps: tuple  # per feature: dict label->code for categorical, None for numeric
    classes: tuple | None  # sorted target labels for classification, else None

    @property
    def n_classes(self) -> int:
        return 0 if self.classes is None else len(self.classes)

    def transform(self, dataset: Dataset):
        """Encode a dataset to (X, y) under this fitted mapping."""
        if len(dataset.columns) != len(self.columns):
            raise DatasetError("column count differs from the fitted schema")
        for got, fitted in zip(dataset.columns, self.columns):
            if got.kind != fitted.kind:
                raise DatasetError(f"column {got.name!r}: kind {got.kind} != fitted {fitted.kind}")

        n = dataset.n_rows
        X = np.empty((n, dataset.n_features), dtype=np.float64)
        unseen = 0
        for j in range(dataset.n_features):
            mapping = self.feature_maps[j]
            col = dataset.column_values(j)
            if mapping is None:
                X[:, j] = col
            else:
                unknown_code = len(mapping)
                codes = [mapping.get(v, unknown_code) for v in col]
                unseen += sum(1 for c in codes if c == unknown_code)
                X[:, j] = codes
        if unseen:
            warnings.warn(f"{dataset.name}: {unseen} cell(s) with labels unseen at fit "
                          "time mapped to the reserved unknown code")

        target = dataset.column_values(dataset.target_index)
        if self.task == REGRESSION:
            y = np.asarray(target, dtype=np.float64)
        else:
            lookup = {lab: i for i, lab in enumerate(self.classes)}
            bad = sorted({v for v in target if v not in lookup})
            if bad:
                raise DatasetError(f"{dataset.name}: target labels unseen at fit time: {bad}")
            y = np.asarray([lookup[v] for v in target], dtype=np.int64)
        return X, y

    def decode_label(self, code: int):
        return self.classes[code]


def fit_encoder(dataset: Dataset) -> Encoder:
    feature_maps = []
    for j, col in enumerate(dataset.feature_columns):
        if col.kind == NUMERIC:
            feature_maps.append(None)
        else:
            labels = sorted(set(dataset.column_values(j)))
            feature_maps.append({lab: i for i, lab in enumerate(labels)})
    classes = None
    if dataset.task in CLASSIFICATION_TASKS:
        classes = tuple(sorted(set(dataset.column_values(dataset.target_index))))
    return Encoder(columns=dataset.columns, task=dataset.task,
                   feature_maps=tuple(feature_maps), classes=classes)


def encode(dataset: Dataset):
    """Encode a dataset to a numeric design matrix plus target vector.

    Returns ``(X, y, encoder)``; apply ``encoder.transform`` to test rows so
    train-fitted label codes are never remapped.
    """
    encoder = fit_encoder(dataset)
    X, y = encoder.transform(dataset)
    return X, y, encoder


def format_value(value, kind: str) -> str:
    """Canonical cell serialization: ``repr`` for floats (exact round-trip),
    the raw label for categorical values."""
    return repr(float(value)) if kind == NUMERIC else str(value)


def write_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in dataset.columns])
        kinds = [c.kind for c in dataset.columns]
        for row in dataset.rows:
            writer.writerow([format_value(v, k) for v, k in zip(row, kinds)])


def export_shifted(test: Dataset, removed, recipe, path, seed: int = 0,
                   metadata: dict | None = None) -> Path:
    """Write the imputed test table to ``path`` with a JSON sidecar.

    The CSV keeps the original header and row order; removed columns carry
    the recipe's fill values. Reloading with the sidecar's column kinds and
    re-encoding reproduces the in-memory imputed matrix exactly.
    """
    from . import imputation  # local import: datasets must not hard-depend on imputation

    removed = sorted(set(removed))
    shifted = imputation.apply(test, removed, recipe, seed=seed)
    path = Path(path)
    write_csv(shifted, path)

    sidecar = {
        "dataset": test.name,
        "task": test.task,
        "removed_indices": removed,
        "removed_names": [test.columns[i].name for i in removed],
        "seed": seed,
        "strategy": recipe.strategy,
        "columns": [{"name": c.name, "kind": c.kind} for c in test.columns],
    }
    if metadata:
        sidecar.update(metadata)
    meta_path = path.with_name(path.name + ".meta.json")
    meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_exported(path) -> Dataset:
    """Reload an exported shift file using column kinds from its sidecar."""
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".meta.json").read_text(encoding="utf-8"))
    schema = [c["kind"] for c in meta["columns"]]
    return load_csv(path, name=meta.get("dataset"), schema=schema)


def _data_file(filename: str) -> Path:
    return Path(resources.files("fsbench").joinpath("data", filename))


REGISTRY = {
    "iris": lambda: _data_file("iris.csv"),
}


def resolve_dataset(name_or_path) -> Path:
    """Map a registered dataset name or a filesystem path to a CSV file."""
    key = str(name_or_path).lower()
    if key in REGISTRY:
        return REGISTRY[key]()
    path = Path(name_or_path)
    if not path.exists():
        raise DatasetError(f"unknown dataset {name_or_path!r}: not a registered name "
                           f"(choices: {sorted(REGISTRY)}) and no such file")
    return path
