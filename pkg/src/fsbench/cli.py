"""Command-line entry point.

    fsbench --dataset iris --model cart --task random --degree 0.3 \
            --export_dataset True --seed 0 --out results/

Failures write a machine-readable ``error.json`` into the output directory
and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ExperimentConfig, run_experiment
from .imputation import STRATEGIES
from .shifts import SCENARIOS


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected True or False, got {text!r}")


def parse_degree(text: str):
    if text.strip().lower() == "grid":
        return "grid"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must be a number in [0,1] or 'grid', got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"degree must be in [0,1], got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsbench",
        description="Measure how tabular models degrade when training-time "
                    "features are removed at test time.")
    parser.add_argument("--dataset", required=True,
                        help="registered dataset name or path to a CSV (target last)")
    parser.add_argument("--model", default="cart",
                        help="in-repo model name(s, comma separated) or 'ext:<command>'")
    parser.add_argument("--task", default="random", choices=SCENARIOS,
                        help="shift scenario")
    parser.add_argument("--degree", default="grid", type=parse_degree,
                        help="shift degree in [0,1], or 'grid' for the 1/N..1 sweep")
    parser.add_argument("--export_dataset", default=False, type=parse_bool,
                        metavar="{True|False}",
                        help="write each shifted test set as a CSV with a JSON sidecar")
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--out", default="fsbench_out", help="output directory")
    parser.add_argument("--train-fraction", default=0.8, type=float)
    parser.add_argument("--strategy", default="mean_mode", choices=STRATEGIES,
                        help="imputation strategy")
    parser.add_argument("--cap", default=10_000, type=int,
                        help="max random-shift combinations per degree")
    parser.add_argument("--upper-bound", action="store_true",
                        help="also retrain on the shifted representation per subset")
    parser.add_argument("--single-index", default=None, type=int,
                        help="restrict task=single to the k-th lowest-|rho| feature")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(
        dataset=args.dataset,
        model=args.model,
        task=args.task,
        degree=args.degree,
        export_dataset=args.export_dataset,
        seed=args.seed,
        output_dir=args.out,
        train_fraction=args.train_fraction,
        strategy=args.strategy,
        combination_cap=args.cap,
        upper_bound=args.upper_bound,
        single_index=args.single_index,
    )
    try:
        result = run_experiment(config)
    except Exception as exc:  # surface every module error as a machine-readable record
        record = {"error": type(exc).__name__, "message": str(exc)}
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(record, indent=2) + "\n",
                                            encoding="utf-8")
        except OSError:
            pass
        print(f"fsbench: {record['error']}: {record['message']}", file=sys.stderr)
        return 1
    print(f"fsbench: wrote {len(result.records)} records to {result.output_dir}")
    for name, target in sorted(result.paths.items()):
        print(f"  {name}: {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
