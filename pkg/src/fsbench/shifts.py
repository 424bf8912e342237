"""Shift planning: turn an importance ranking plus a scenario choice into
the concrete feature subsets to remove at each degree."""
from __future__ import annotations

import itertools
import json
import math
import random
import zlib
from dataclasses import dataclass
from pathlib import Path

from .importance import ImportanceRanking

SINGLE = "single"
MOST = "most"
LEAST = "least"
RANDOM = "random"

SCENARIOS = (SINGLE, LEAST, MOST, RANDOM)

DEFAULT_CAP = 10_000


@dataclass(frozen=True)
class Scenario:
    tag: str
    degree: float = 0.0
    single_index: int | None = None  # 1-based ordinal in ascending-|rho| order
    seed: int = 0

    def __post_init__(self):
        if self.tag not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.tag!r}; choose from {SCENARIOS}")
        if not 0.0 <= self.degree <= 1.0:
            raise ValueError(f"degree must be in [0,1], got {self.degree}")


@dataclass(frozen=True)
class ShiftPlan:
    """One scenario instantiation: the ordered feature subsets to remove.

    Every subset has cardinality ``n_removed`` and all subsets are distinct;
    single/most/least plans hold exactly one subset, random plans hold
    ``min(cap, C(N, n))``.
    """

    scenario: Scenario
    n_features: int
    subsets: tuple[tuple[int, ...], ...]
    n_removed: int
    combination_cap: int = DEFAULT_CAP

    def __post_init__(self):
        seen = set()
        for subset in self.subsets:
            if len(subset) != self.n_removed:
                raise ValueError(f"subset {subset} has size {len(subset)}, expected {self.n_removed}")
            if any(not 0 <= i < self.n_features for i in subset):
                raise ValueError(f"subset {subset} outside feature range 0..{self.n_features - 1}")
            if tuple(subset) != tuple(sorted(set(subset))):
                raise ValueError(f"subset {subset} is not a sorted duplicate-free tuple")
            if subset in seen:
                raise ValueError(f"duplicate subset {subset}")
            seen.add(subset)


def degree_to_count(degree: float, n_features: int) -> int:
    """Map a shift degree in [0,1] to a removal count: round-half-up of
    ``degree * N``, clamped to [0, N]."""
    if not 0.0 <= degree <= 1.0:
        raise ValueError(f"degree must be in [0,1], got {degree}")
    if n_features < 1:
        raise ValueError("need at least one feature")
    n = int(math.floor(degree * n_features + 0.5))
    return min(max(n, 0), n_features)


def plan_single(ranking: ImportanceRanking, k: int) -> ShiftPlan:
    """Remove exactly the k-th feature in ascending-|rho| order (1-based);
    every single-shift trial restores all other features."""
    n = ranking.n_features
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    feature = ranking.order[k - 1]
    scenario = Scenario(tag=SINGLE, degree=1.0 / n, single_index=k)
    return ShiftPlan(scenario=scenario, n_features=n,
                     subsets=((feature,),), n_removed=1)


def plan_ordered(ranking: ImportanceRanking, degree: float, direction: str) -> ShiftPlan:
    """Remove the first ``round(degree * N)`` features of the ascending-|rho|
    order (``least``) or of its reverse (``most``)."""
    if direction not in (MOST, LEAST):
        raise ValueError(f"direction must be {MOST!r} or {LEAST!r}, got {direction!r}")
    n = ranking.n_features
    count = degree_to_count(degree, n)
    order = ranking.order if direction == LEAST else tuple(reversed(ranking.order))
    subset = tuple(sorted(order[:count]))
    return ShiftPlan(scenario=Scenario(tag=direction, degree=degree),
                     n_features=n, subsets=(subset,), n_removed=count)


def plan_random(n_features: int, degree: float, seed: int = 0,
                cap: int = DEFAULT_CAP) -> ShiftPlan:
    """All C(N, n) size-n subsets when that count fits under ``cap``
    (lexicographic order, seed-independent); otherwise exactly ``cap``
    distinct subsets sampled uniformly without replacement."""
    if cap < 1:
        raise ValueError("cap must be positive")
    n = degree_to_count(degree, n_features)
    total = math.comb(n_features, n)
    scenario = Scenario(tag=RANDOM, degree=degree, seed=seed)

    if total <= cap:
        subsets = tuple(itertools.combinations(range(n_features), n))
    else:
        rng = random.Random(seed)
        chosen: set = set()
        while len(chosen) < cap:
            chosen.add(tuple(sorted(rng.sample(range(n_features), n))))
        subsets = tuple(sorted(chosen))
    return ShiftPlan(scenario=scenario, n_features=n_features,
                     subsets=subsets, n_removed=n, combination_cap=cap)


def degree_grid(n_features: int) -> list[float]:
    """The default sweep {1/N, 2/N, ..., 1}."""
    return [k / n_features for k in range(1, n_features + 1)]


def derive_seed(base_seed: int, subset) -> int:
    """Stable per-subset seed for parallel imputation workers."""
    key = ",".join(str(i) for i in sorted(subset)).encode("ascii")
    return (int(base_seed) ^ zlib.crc32(key)) & 0x7FFFFFFF


def plan_to_dict(plan: ShiftPlan) -> dict:
    return {
        "scenario": plan.scenario.tag,
        "degree": plan.scenario.degree,
        "single_index": plan.scenario.single_index,
        "seed": plan.scenario.seed,
        "n_features": plan.n_features,
        "n_removed": plan.n_removed,
        "combination_cap": plan.combination_cap,
        "subsets": [list(s) for s in plan.subsets],
    }


def write_plans(plans, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [plan_to_dict(p) for p in plans]
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
