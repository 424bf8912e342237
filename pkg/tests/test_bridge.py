from __future__ import annotations

import csv
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from fsbench.bridge import BridgeError, BridgeJob, bridge_evaluate
from fsbench.datasets import fit_encoder, load_csv, split
from fsbench.evaluation import accuracy, rmse, roc_auc
from fsbench.models import MAJORITY_OR_MEAN, CART, ModelSpec, fit, predict

MAJORITY_ADAPTER = """\
import csv, sys

train, test, out, task = sys.argv[1:5]
with open(train, newline="") as fh:
    rows = list(csv.reader(fh))
labels = [r[-1] for r in rows[1:]]
classes = sorted(set(labels))
counts = {c: labels.count(c) for c in classes}
top = max(counts.values())
first_seen = {c: labels.index(c) for c in classes}
winner = min((c for c in classes if counts[c] == top), key=lambda c: first_seen[c])
freqs = [counts[c] / len(labels) for c in classes]

with open(test, newline="") as fh:
    n_test = sum(1 for _ in fh) - 1

with open(out, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\\n")
    w.writerow(["label"] + ["p_%s" % c for c in classes])
    for _ in range(n_test):
        w.writerow([winner] + [repr(f) for f in freqs])
"""

MEAN_REGRESSOR_ADAPTER = """\
import csv, sys

train, test, out, task = sys.argv[1:5]
with open(train, newline="") as fh:
    rows = list(csv.reader(fh))
values = [float(r[-1]) for r in rows[1:]]
mean = sum(values) / len(values)
with open(test, newline="") as fh:
    n_test = sum(1 for _ in fh) - 1
with open(out, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\\n")
    w.writerow(["prediction"])
    for _ in range(n_test):
        w.writerow([repr(mean)])
"""

# wraps the in-repo cart model inside an adapter process
CART_WRAPPER_ADAPTER = """\
import sys
from fsbench.datasets import fit_encoder, load_csv
from fsbench.models import CART, ModelSpec, fit, predict
import csv

train_path, test_path, out, task = sys.argv[1:5]
train = load_csv(train_path)
encoder = fit_encoder(train)
X, y = encoder.transform(train)
handle = fit(ModelSpec(name="cart", kind=CART), X, y, train.task,
             n_classes=encoder.n_classes or None)

with open(test_path, newline="") as fh:
    reader = csv.reader(fh)
    header = next(reader)
    rows = list(reader)
import numpy as np
Xt = np.empty((len(rows), len(header)))
for j, col in enumerate(train.feature_columns):
    mapping = encoder.feature_maps[j]
    for i, row in enumerate(rows):
        Xt[i, j] = float(row[j]) if mapping is None else mapping.get(row[j], len(mapping))

preds = predict(handle, Xt)
with open(out, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\\n")
    w.writerow(["label"] + ["p_%s" % c for c in encoder.classes])
    for p in preds:
        w.writerow([encoder.classes[p.label]] + [repr(q) for q in p.probs])
"""


def write_adapter(tmp_path: Path, source: str, name: str = "adapter.py") -> str:
    path = tmp_path / name
    path.write_text(textwrap.dedent(source), encoding="utf-8")
    return f"{sys.executable} {path}"


def make_job(tmp_path: Path, command: str, task: str, **kw) -> BridgeJob:
    return BridgeJob(command=command, workdir=tmp_path,
                     train_file=tmp_path / "train.csv",
                     test_file=tmp_path / "test.csv",
                     predictions_file=tmp_path / "predictions.csv",
                     task=task, **kw)


@pytest.fixture()
def clf_parts(classification_dataset):
    return split(classification_dataset, 0.8, seed=0)


@pytest.fixture()
def reg_parts(regression_dataset):
    return split(regression_dataset, 0.8, seed=0)


class TestBridgeFiles:
    def test_train_has_target_test_does_not(self, tmp_path, clf_parts):
        command = write_adapter(tmp_path, MAJORITY_ADAPTER)
        job = make_job(tmp_path, command, clf_parts.train.task)
        bridge_evaluate(job, clf_parts.train, clf_parts.test)
        with open(job.train_file, newline="") as fh:
            train_header = next(csv.reader(fh))
        with open(job.test_file, newline="") as fh:
            test_header = next(csv.reader(fh))
        assert train_header[-1] == "label"
        assert test_header == train_header[:-1]


class TestBridgeEquivalence:
    def test_majority_echo_matches_in_repo_baseline(self, tmp_path, clf_parts):
        command = write_adapter(tmp_path, MAJORITY_ADAPTER)
        job = make_job(tmp_path, command, clf_parts.train.task)
        bridged = bridge_evaluate(job, clf_parts.train, clf_parts.test)

        enc = fit_encoder(clf_parts.train)
        X_tr, y_tr = enc.transform(clf_parts.train)
        X_te, y_te = enc.transform(clf_parts.test)
        handle = fit(ModelSpec(name="majority", kind=MAJORITY_OR_MEAN), X_tr, y_tr,
                     clf_parts.train.task, n_classes=enc.n_classes)
        local = predict(handle, X_te)

        acc_b = accuracy([p.label for p in bridged], y_te)
        acc_l = accuracy([p.label for p in local], y_te)
        auc_b = roc_auc([p.probs for p in bridged], y_te, enc.n_classes)
        auc_l = roc_auc([p.probs for p in local], y_te, enc.n_classes)
        assert acc_b == pytest.approx(acc_l, abs=1e-12)
        assert auc_b == pytest.approx(auc_l, abs=1e-12)

    def test_wrapped_cart_matches_in_process_metrics(self, tmp_path, clf_parts):
        command = write_adapter(tmp_path, CART_WRAPPER_ADAPTER)
        job = make_job(tmp_path, command, clf_parts.train.task)
        bridged = bridge_evaluate(job, clf_parts.train, clf_parts.test)

        enc = fit_encoder(clf_parts.train)
        X_tr, y_tr = enc.transform(clf_parts.train)
        X_te, y_te = enc.transform(clf_parts.test)
        handle = fit(ModelSpec(name="cart", kind=CART), X_tr, y_tr,
                     clf_parts.train.task, n_classes=enc.n_classes)
        local = predict(handle, X_te)

        assert accuracy([p.label for p in bridged], y_te) == pytest.approx(
            accuracy([p.label for p in local], y_te), abs=1e-12)
        assert roc_auc([p.probs for p in bridged], y_te, enc.n_classes) == pytest.approx(
            roc_auc([p.probs for p in local], y_te, enc.n_classes), abs=1e-12)

    def test_regression_file_metrics_match_in_memory(self, tmp_path, reg_parts):
        command = write_adapter(tmp_path, MEAN_REGRESSOR_ADAPTER)
        job = make_job(tmp_path, command, reg_parts.train.task)
        bridged = bridge_evaluate(job, reg_parts.train, reg_parts.test)

        enc = fit_encoder(reg_parts.train)
        _, y_te = enc.transform(reg_parts.test)
        train_mean = float(np.mean([r[-1] for r in reg_parts.train.rows]))
        expected = rmse([train_mean] * len(y_te), y_te)
        assert rmse([p.value for p in bridged], y_te) == pytest.approx(expected, abs=1e-12)


class TestBridgeFaults:
    def test_wrong_row_count(self, tmp_path, clf_parts):
        source = MAJORITY_ADAPTER.replace("for _ in range(n_test):",
                                          "for _ in range(n_test - 3):")
        command = write_adapter(tmp_path, source)
        job = make_job(tmp_path, command, clf_parts.train.task)
        with pytest.raises(BridgeError, match="rows"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_off_simplex_probabilities(self, tmp_path, clf_parts):
        source = MAJORITY_ADAPTER.replace(
            "freqs = [counts[c] / len(labels) for c in classes]",
            "freqs = [0.9 for c in classes]")
        command = write_adapter(tmp_path, source)
        job = make_job(tmp_path, command, clf_parts.train.task)
        with pytest.raises(BridgeError, match="simplex"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_nonzero_exit(self, tmp_path, clf_parts):
        command = write_adapter(tmp_path, "import sys; sys.exit(3)\n")
        job = make_job(tmp_path, command, clf_parts.train.task)
        with pytest.raises(BridgeError, match="status 3"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_timeout(self, tmp_path, clf_parts):
        command = write_adapter(tmp_path, "import time; time.sleep(30)\n")
        job = make_job(tmp_path, command, clf_parts.train.task, timeout=0.5)
        with pytest.raises(BridgeError, match="timed out"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_missing_command(self, tmp_path, clf_parts):
        job = make_job(tmp_path, "/nonexistent/binary", clf_parts.train.task)
        with pytest.raises(BridgeError, match="not executable"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_bad_header(self, tmp_path, clf_parts):
        source = MAJORITY_ADAPTER.replace('["label"] + ["p_%s" % c for c in classes]',
                                          '["prediction"]')
        command = write_adapter(tmp_path, source)
        job = make_job(tmp_path, command, clf_parts.train.task)
        with pytest.raises(BridgeError, match="header"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_unknown_label(self, tmp_path, clf_parts):
        source = MAJORITY_ADAPTER.replace("w.writerow([winner] +",
                                          "w.writerow(['zzz'] +")
        command = write_adapter(tmp_path, source)
        job = make_job(tmp_path, command, clf_parts.train.task)
        with pytest.raises(BridgeError, match="unknown label"):
            bridge_evaluate(job, clf_parts.train, clf_parts.test)

    def test_env_passthrough(self, tmp_path, clf_parts):
        source = """\
import csv, os, sys
train, test, out, task = sys.argv[1:5]
assert os.environ["FSBENCH_SEED"] == "77", os.environ.get("FSBENCH_SEED")
""" + MAJORITY_ADAPTER
        command = write_adapter(tmp_path, source)
        job = make_job(tmp_path, command, clf_parts.train.task, env={"FSBENCH_SEED": 77})
        assert bridge_evaluate(job, clf_parts.train, clf_parts.test)
