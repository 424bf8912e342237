"""End-to-end experiment orchestration.

One experiment = load -> split -> rank features -> plan shifts -> fit once
per model -> impute + predict per subset -> metrics and gaps -> report
bundle. All outputs are deterministic functions of (config, seed).
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import bridge as bridge_mod
from .datasets import (CLASSIFICATION_TASKS, Dataset, DataSplit, fit_encoder,
                       load_csv, export_shifted, resolve_dataset,
                       split as split_dataset)
from .evaluation import (ACCURACY, AUC, EvalRecord, RMSE, accuracy, make_record,
                         rmse, roc_auc)
from .importance import ImportanceRanking, correlation_matrix_to_csv, rank_features, ranking_to_csv
from .imputation import MEAN_MODE, apply as apply_recipe, fit_recipe
from .models import ModelSpec, fit, fit_upper_bound, predict
from .models import (BOOSTED_STUMPS, CART, KNN, LINEAR, LOGISTIC, MAJORITY_OR_MEAN)
from .reports import emit_reports, fmt_cell
from .shifts import (RANDOM, SCENARIOS, SINGLE, Scenario, ShiftPlan,
                     degree_grid, derive_seed, plan_ordered, plan_random,
                     plan_single, write_plans)

MODEL_ALIASES = {
    "majority": MAJORITY_OR_MEAN,
    "mean": MAJORITY_OR_MEAN,
    MAJORITY_OR_MEAN: MAJORITY_OR_MEAN,
    "linear": LINEAR,
    "logistic": LOGISTIC,
    "knn": KNN,
    "cart": CART,
    "boosted": BOOSTED_STUMPS,
    BOOSTED_STUMPS: BOOSTED_STUMPS,
}

EXTERNAL_PREFIX = "ext:"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    model: str = "cart"
    task: str = RANDOM
    degree: float | str = "grid"  # scalar in [0,1] or the string "grid"
    export_dataset: bool = False
    seed: int = 0
    output_dir: str = "fsbench_out"
    train_fraction: float = 0.8
    strategy: str = MEAN_MODE
    combination_cap: int = 10_000
    metrics: tuple[str, ...] = ()  # empty = task default
    upper_bound: bool = False
    single_index: int | None = None  # restrict task=single to one ordinal
    bridge_timeout: float = 600.0

    def __post_init__(self):
        if self.task not in SCENARIOS:
            raise ValueError(f"task must be one of {SCENARIOS}, got {self.task!r}")
        if isinstance(self.degree, str):
            if self.degree != "grid":
                raise ValueError(f"degree must be a number in [0,1] or 'grid', got {self.degree!r}")
        elif not 0.0 <= float(self.degree) <= 1.0:
            raise ValueError(f"degree must be in [0,1], got {self.degree}")


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[EvalRecord, ...]
    paths: dict = field(default_factory=dict)
    ranking: ImportanceRanking | None = None
    plans: tuple[ShiftPlan, ...] = ()
    output_dir: Path | None = None


def default_metrics(task: str) -> tuple[str, ...]:
    return (ACCURACY, AUC) if task in CLASSIFICATION_TASKS else (RMSE,)


def metric_value(name: str, predictions, y, n_classes: int) -> float:
    if name == ACCURACY:
        return accuracy([p.label for p in predictions], y)
    if name == AUC:
        return roc_auc([p.probs for p in predictions], y, n_classes)
    if name == RMSE:
        return rmse([p.value for p in predictions], y)
    raise ValueError(f"unknown metric {name!r}")


def parse_models(text: str) -> list[tuple[str, str]]:
    """Parse the --model value into (display name, target) pairs.

    An ``ext:<command>`` value is a single external model; otherwise the
    value is a comma-separated list of in-repo model names.
    """
    text = text.strip()
    if text.startswith(EXTERNAL_PREFIX):
        command = text[len(EXTERNAL_PREFIX):].strip()
        if not command:
            raise ValueError("empty external model command")
        return [(text, command)]
    pairs = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token not in MODEL_ALIASES:
            raise ValueError(f"unknown model {token!r}; choose from "
                             f"{sorted(set(MODEL_ALIASES))} or 'ext:<command>'")
        pairs.append((token, MODEL_ALIASES[token]))
    if not pairs:
        raise ValueError("no model named")
    return pairs


def build_plans(config: ExperimentConfig, ranking: ImportanceRanking) -> list[ShiftPlan]:
    """Instantiate the scenario plans the config asks for (degree 0 rows are
    handled separately as the closed-environment baseline)."""
    n = ranking.n_features
    if config.task == SINGLE:
        ks = [config.single_index] if config.single_index else range(1, n + 1)
        return [plan_single(ranking, k) for k in ks]
    if config.degree == "grid":
        degrees = degree_grid(n)
    else:
        degrees = [float(config.degree)]
    plans = []
    for degree in degrees:
        if config.task == RANDOM:
            plans.append(plan_random(n, degree, seed=config.seed, cap=config.combination_cap))
        else:
            plans.append(plan_ordered(ranking, degree, config.task))
    return plans


class _InRepoRunner:
    """Fits once, then predicts encoded views of (possibly imputed) test sets."""

    def __init__(self, name, kind, split: DataSplit, encoder, seed):
        self.name = name
        self.spec = ModelSpec(name=name, kind=kind, seed=seed)
        self.split = split
        self.encoder = encoder
        X, y = encoder.transform(split.train)
        self.handle = fit(self.spec, X, y, split.train.task,
                          n_classes=encoder.n_classes or None)
        self.fit_count = 1

    def predictions(self, test: Dataset):
        X, _ = self.encoder.transform(test)
        return predict(self.handle, X)


class _BridgeRunner:
    """Delegates every evaluation to an external command via the bridge."""

    def __init__(self, name, command, split: DataSplit, workdir: Path, seed, timeout):
        self.name = name
        self.command = command
        self.split = split
        self.workdir = Path(workdir)
        self.seed = seed
        self.timeout = timeout
        self.invocations = 0

    def predictions(self, test: Dataset):
        self.invocations += 1
        job = bridge_mod.BridgeJob(
            command=self.command,
            workdir=self.workdir,
            train_file=self.workdir / "train.csv",
            test_file=self.workdir / "test.csv",
            predictions_file=self.workdir / "predictions.csv",
            task=self.split.train.task,
            timeout=self.timeout,
            env={"FSBENCH_SEED": self.seed},
        )
        return bridge_mod.bridge_evaluate(job, self.split.train, test)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute one experiment and write the report bundle to
    ``config.output_dir``. Returns the records for programmatic use."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    path = resolve_dataset(config.dataset)
    dataset = load_csv(path)
    parts = split_dataset(dataset, train_fraction=config.train_fraction, seed=config.seed)
    encoder = fit_encoder(parts.train)
    _, y_test = encoder.transform(parts.test)

    ranking = rank_features(parts.train)
    ranking_to_csv(ranking, parts.train, out / "importance.csv")
    correlation_matrix_to_csv(parts.train, out / "correlation_matrix.csv")

    plans = build_plans(config, ranking)
    write_plans(plans, out / "plan.json")

    recipe = fit_recipe(parts.train, config.strategy)
    metric_names = tuple(config.metrics) or default_metrics(dataset.task)

    runners = []
    for display, target in parse_models(config.model):
        if display.startswith(EXTERNAL_PREFIX):
            workdir = out / "bridge" / _safe_name(display)
            workdir.mkdir(parents=True, exist_ok=True)
            runners.append(_BridgeRunner(display, target, parts, workdir,
                                         config.seed, config.bridge_timeout))
        else:
            runners.append(_InRepoRunner(display, target, parts, encoder, config.seed))

    if config.upper_bound and any(isinstance(r, _BridgeRunner) for r in runners):
        raise ValueError("upper-bound retraining is only available for in-repo models")

    records: list[EvalRecord] = []
    upper_rows: list[dict] = []
    export_dir = out / "shifted"

    for runner in runners:
        baseline_preds = runner.predictions(parts.test)
        metric_0 = {m: metric_value(m, baseline_preds, y_test, encoder.n_classes)
                    for m in metric_names}
        baseline_scenario = Scenario(tag=config.task, degree=0.0, seed=config.seed)
        for m in metric_names:
            records.append(make_record(dataset.name, runner.name, dataset.task,
                                       baseline_scenario, 0.0, 0, (),
                                       m, metric_0[m], metric_0[m]))

        for plan in plans:
            for subset_pos, subset in enumerate(plan.subsets):
                if not subset:
                    continue  # the baseline record already covers degree 0
                subset_seed = derive_seed(config.seed, subset)
                imputed = apply_recipe(parts.test, subset, recipe, seed=subset_seed)
                preds = runner.predictions(imputed)
                for m in metric_names:
                    mi = metric_value(m, preds, y_test, encoder.n_classes)
                    records.append(make_record(dataset.name, runner.name, dataset.task,
                                               plan.scenario, plan.scenario.degree,
                                               plan.n_removed, subset, m,
                                               metric_0[m], mi))

                if config.upper_bound and plan.n_removed > 0:
                    ub_handle = fit_upper_bound(runner.spec, parts, subset,
                                                strategy=config.strategy,
                                                seed=subset_seed)
                    X_imp, _ = encoder.transform(imputed)
                    ub_preds = predict(ub_handle, X_imp)
                    for m in metric_names:
                        upper_rows.append({
                            "model": runner.name, "scenario": plan.scenario.tag,
                            "degree": plan.scenario.degree,
                            "subset": "|".join(str(i) for i in subset),
                            "metric": m,
                            "metric_shifted": metric_value(m, preds, y_test, encoder.n_classes),
                            "metric_retrained": metric_value(m, ub_preds, y_test, encoder.n_classes),
                        })

                if config.export_dataset:
                    stem = _export_stem(dataset.name, plan, subset_pos)
                    export_shifted(parts.test, subset, recipe,
                                   export_dir / f"{stem}.csv", seed=subset_seed,
                                   metadata={"scenario": plan.scenario.tag,
                                             "degree": plan.scenario.degree,
                                             "single_index": plan.scenario.single_index,
                                             "base_seed": config.seed})

    paths = emit_reports(records, out)
    if upper_rows:
        paths["upper_bound"] = _write_upper_bound(upper_rows, out / "upper_bound.csv")
    _write_config_echo(config, out / "config.json")

    if any(isinstance(r, _BridgeRunner) for r in runners):
        total_subsets = sum(len([s for s in p.subsets if s]) for p in plans)
        for runner in runners:
            if isinstance(runner, _BridgeRunner) and runner.invocations != total_subsets + 1:
                warnings.warn(f"{runner.name}: {runner.invocations} bridge invocations "
                              f"for {total_subsets} subsets + 1 baseline")

    return ExperimentResult(records=tuple(records), paths=paths, ranking=ranking,
                            plans=tuple(plans), output_dir=out)


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text)[:80]


def _export_stem(dataset_name: str, plan: ShiftPlan, subset_pos: int) -> str:
    scenario = plan.scenario
    stem = f"{dataset_name}_{scenario.tag}_d{scenario.degree:.6f}"
    if scenario.tag == SINGLE:
        stem += f"_k{scenario.single_index}"
    elif scenario.tag == RANDOM:
        stem += f"_s{subset_pos:05d}"
    return stem


def _write_upper_bound(rows: list[dict], path: Path) -> Path:
    fields = ["model", "scenario", "degree", "subset", "metric",
              "metric_shifted", "metric_retrained"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in sorted(rows, key=lambda r: tuple(str(r[f]) for f in fields)):
            writer.writerow([fmt_cell(row[f]) for f in fields])
    return path


def _write_config_echo(config: ExperimentConfig, path: Path) -> None:
    payload = {k: (str(v) if isinstance(v, Path) else v)
               for k, v in vars(config).items()}
    payload["metrics"] = list(config.metrics)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
