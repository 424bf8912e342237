#!/usr/bin/env python3
"""Run the full four-scenario sweep on Iris for every in-repo model and
print the bucketed gap table.

Usage: python scripts/run_iris_sweep.py [output_dir]
"""
from __future__ import annotations

import sys
from pathlib import Path

from fsbench.evaluation import bucket_degrees
from fsbench.experiment import ExperimentConfig, run_experiment

MODELS = "majority,logistic,knn,cart,boosted"


def main() -> int:
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("iris_sweep")
    all_records = []
    for task in ("single", "least", "most", "random"):
        config = ExperimentConfig(dataset="iris", model=MODELS, task=task,
                                  degree="grid", seed=0,
                                  output_dir=out_root / task)
        result = run_experiment(config)
        all_records.extend(result.records)
        print(f"{task}: {len(result.records)} records -> {result.output_dir}")

    print("\nbucketed mean gap (accuracy):")
    cells = [c for c in bucket_degrees([r for r in all_records if r.n_removed > 0])
             if c.metric_name == "accuracy"]
    for cell in cells:
        print(f"  {cell.model:<10} {int(cell.bucket * 100):>3}%  "
              f"delta={cell.mean_delta:+.3f}  (n={cell.count})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
