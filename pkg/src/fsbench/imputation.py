"""Train-statistic fill values for removed features.

Imputation keeps test inputs at the training dimensionality: removed
numeric columns get the train mean, removed categorical columns the train
mode (ties by sorted label order). The empirical-resampling strategy exists
as a comparator and draws per-cell i.i.d. values from the stored train
column under a seed. Zero-fill is deliberately not offered: constants from
outside the train distribution would inject an artificial shift of their
own.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .datasets import NUMERIC, Dataset

MEAN_MODE = "mean_mode"
RANDOM_EMPIRICAL = "random_empirical"

STRATEGIES = (MEAN_MODE, RANDOM_EMPIRICAL)


@dataclass(frozen=True)
class ImputationRecipe:
    """Per-feature fills computed from the training split only."""

    strategy: str
    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    fills: tuple  # train mean (float) per numeric column, modal label per categorical
    pools: tuple | None = None  # full train columns, kept for empirical resampling

    def fill_for(self, feature_index: int):
        return self.fills[feature_index]


def fit_recipe(train: Dataset, strategy: str = MEAN_MODE) -> ImputationRecipe:
    """Compute fill values for every feature column of the training split."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    fills = []
    for j, col in enumerate(train.feature_columns):
        values = train.column_values(j)
        if col.kind == NUMERIC:
            fills.append(float(np.mean(values)))
        else:
            counts = Counter(values)
            top = max(counts.values())
            fills.append(min(label for label, c in counts.items() if c == top))
    pools = None
    if strategy == RANDOM_EMPIRICAL:
        pools = tuple(train.column_values(j) for j in range(train.n_features))
    return ImputationRecipe(
        strategy=strategy,
        column_names=tuple(c.name for c in train.feature_columns),
        column_kinds=tuple(c.kind for c in train.feature_columns),
        fills=tuple(fills),
        pools=pools,
    )


def apply(test: Dataset, removed, recipe: ImputationRecipe, seed: int = 0) -> Dataset:
    """Replace each removed test column with its recipe fill.

    Row count, row order and column count never change. The empirical
    strategy draws each cell independently from the stored train column,
    deterministically for a fixed seed.
    """
    removed = sorted(set(removed))
    if any(not 0 <= i < test.n_features for i in removed):
        raise ValueError(f"removed indices {removed} outside feature range "
                         f"0..{test.n_features - 1}")
    _check_schema(test, recipe)
    if not removed:
        return test

    replacement: dict[int, list] = {}
    if recipe.strategy == MEAN_MODE:
        for j in removed:
            replacement[j] = [recipe.fills[j]] * test.n_rows
    else:
        if recipe.pools is None:
            raise ValueError("recipe carries no train columns for empirical resampling")
        rng = np.random.RandomState(seed)
        for j in removed:  # ascending order fixes the draw sequence
            pool = recipe.pools[j]
            idx = rng.randint(0, len(pool), size=test.n_rows)
            replacement[j] = [pool[i] for i in idx]

    rows = [
        tuple(replacement[j][i] if j in replacement else value
              for j, value in enumerate(row))
        for i, row in enumerate(test.rows)
    ]
    return test.replace_rows(rows)


def _check_schema(test: Dataset, recipe: ImputationRecipe) -> None:
    names = tuple(c.name for c in test.feature_columns)
    kinds = tuple(c.kind for c in test.feature_columns)
    if names != recipe.column_names or kinds != recipe.column_kinds:
        raise ValueError("recipe was fitted on a different feature schema")
