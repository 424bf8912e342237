from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes oracles importable

from fsbench.datasets import load_csv, resolve_dataset, split


@pytest.fixture(scope="session")
def iris_path() -> Path:
    return resolve_dataset("iris")


@pytest.fixture(scope="session")
def iris(iris_path):
    return load_csv(iris_path)


@pytest.fixture(scope="session")
def iris_split(iris):
    return split(iris, train_fraction=0.8, seed=0)


def make_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture()
def csv_factory(tmp_path):
    def build(header, rows, name="table.csv"):
        return make_csv(tmp_path / name, header, rows)
    return build


def synthetic_regression_rows(n=120, n_features=5, seed=7):
    """Linear signal plus noise; feature influence grows with the index."""
    rng = np.random.RandomState(seed)
    X = rng.uniform(-2.0, 2.0, size=(n, n_features))
    weights = np.arange(1, n_features + 1, dtype=float)
    y = X @ weights + rng.normal(scale=0.3, size=n)
    header = [f"f{j}" for j in range(n_features)] + ["target"]
    rows = [[repr(float(v)) for v in row] + [repr(float(t))] for row, t in zip(X, y)]
    return header, rows


def synthetic_classification_rows(n=120, n_features=4, seed=11):
    """Two informative features, two noise features, labels a/b."""
    rng = np.random.RandomState(seed)
    X = rng.normal(size=(n, n_features))
    logits = 2.0 * X[:, 0] + 1.0 * X[:, 1]
    labels = np.where(logits + rng.normal(scale=0.5, size=n) > 0, "b", "a")
    header = [f"f{j}" for j in range(n_features)] + ["label"]
    rows = [[repr(float(v)) for v in row] + [lab] for row, lab in zip(X, labels)]
    return header, rows


@pytest.fixture(scope="session")
def regression_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth_reg.csv"
    header, rows = synthetic_regression_rows()
    make_csv(path, header, rows)
    return load_csv(path)


@pytest.fixture(scope="session")
def classification_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth_clf.csv"
    header, rows = synthetic_classification_rows()
    make_csv(path, header, rows)
    return load_csv(path)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed"):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in str(getattr(report, "nodeid", "")):
                name = report.nodeid.split("::")[-1]
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"[{status:>6}] {name}")
