"""fsbench: a benchmark harness for feature shifts in tabular prediction.

Measures how models degrade when features present at training time are
absent at test time, across four shift scenarios (single, least, most,
random), with train-statistic imputation and gap/rank reporting.
"""

from .datasets import (Column, DataSplit, Dataset, Encoder, encode, export_shifted,
                       infer_schema, load_csv, load_exported, resolve_dataset, split)
from .evaluation import (EvalRecord, RankTable, accuracy, aggregate_random,
                         average_rank, bucket_degrees, performance_gap, rmse, roc_auc)
from .experiment import ExperimentConfig, ExperimentResult, run_experiment
from .importance import (FeatureScore, ImportanceRanking, kendall_tau,
                         mutual_information, pearson, rank_features, spearman)
from .imputation import ImputationRecipe, apply, fit_recipe
from .bridge import BridgeError, BridgeJob, bridge_evaluate
from .models import ModelSpec, Prediction, fit, fit_upper_bound, predict
from .shifts import (Scenario, ShiftPlan, degree_to_count, plan_ordered,
                     plan_random, plan_single)

__version__ = "0.1.0"
