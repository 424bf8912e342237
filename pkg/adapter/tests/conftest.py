from __future__ import annotations

import sys

import numpy as np
import pytest

from fsbench.datasets import load_csv, resolve_dataset, split


ADAPTER_COMMAND = f"{sys.executable} -m fsbench_adapter"


@pytest.fixture(scope="session")
def iris():
    return load_csv(resolve_dataset("iris"))


@pytest.fixture(scope="session")
def iris_parts(iris):
    return split(iris, 0.8, seed=0)


@pytest.fixture(scope="session")
def iris_binary_parts(iris):
    rows = [row[:-1] + ("setosa" if row[-1] == "setosa" else "other",)
            for row in iris.rows]
    from fsbench.datasets import Dataset
    binary = Dataset(name="iris_binary", columns=iris.columns, rows=tuple(rows),
                     task="binary")
    return split(binary, 0.8, seed=0)


@pytest.fixture(scope="session")
def regression_parts(tmp_path_factory):
    rng = np.random.RandomState(5)
    X = rng.uniform(-1.0, 1.0, size=(100, 3))
    y = 2.0 * X[:, 0] - X[:, 2] + rng.normal(scale=0.2, size=100)
    path = tmp_path_factory.mktemp("data") / "reg.csv"
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a", "b", "c", "y"])
        for row, t in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    return split(load_csv(path), 0.8, seed=0)
