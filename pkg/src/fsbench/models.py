"""In-repo baseline learners behind a uniform train/predict interface.

The zoo exists so the shift mechanics are testable without any external ML
stack: a majority/mean baseline, least squares, multinomial logistic
regression, k-nearest neighbours, a CART tree and gradient-boosted stumps.
Every learner is deterministic for a fixed seed, and classification
predictions always carry a full probability vector over the training
classes.

Ties in predicted-label argmax are broken by the class's first occurrence
in the training targets, which keeps knn/cart predictions equivariant
under bijective relabeling.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .datasets import CLASSIFICATION_TASKS, DataSplit, REGRESSION, fit_encoder
from .imputation import MEAN_MODE, apply as apply_recipe, fit_recipe

MAJORITY_OR_MEAN = "majority_or_mean"
LINEAR = "linear"
LOGISTIC = "logistic"
KNN = "knn"
CART = "cart"
BOOSTED_STUMPS = "boosted_stumps"

KINDS = (MAJORITY_OR_MEAN, LINEAR, LOGISTIC, KNN, CART, BOOSTED_STUMPS)

# linear is least squares only; logistic is classification only.
_REGRESSION_ONLY = {LINEAR}
_CLASSIFICATION_ONLY = {LOGISTIC}


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {KINDS}")


@dataclass(frozen=True)
class Prediction:
    value: float | None = None           # regression
    label: int | None = None             # classification: encoded class code
    probs: tuple[float, ...] | None = None  # classification: simplex over classes


def supports(kind: str, task: str) -> bool:
    if task == REGRESSION:
        return kind not in _CLASSIFICATION_ONLY
    return kind not in _REGRESSION_ONLY


def _first_seen_order(y: np.ndarray, n_classes: int) -> np.ndarray:
    """Tie-break key per class: position of its first training occurrence.
    Classes absent from the training targets sort after all present ones."""
    first = len(y) + np.arange(n_classes, dtype=np.float64)
    for pos, label in enumerate(y):
        label = int(label)
        if first[label] >= len(y):
            first[label] = pos
    return first


def _argmax_labels(probs: np.ndarray, first_seen: np.ndarray) -> np.ndarray:
    """Row-wise argmax with exact ties resolved by earliest-seen class."""
    n, k = probs.shape
    best = probs.max(axis=1, keepdims=True)
    tied = probs == best
    key = np.where(tied, first_seen[None, :], np.inf)
    return key.argmin(axis=1)


def _standardize_fit(X: np.ndarray):
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    keep = sigma > 0.0
    return mu, sigma, keep


def _standardize_apply(X, mu, sigma, keep):
    Xs = (X[:, keep] - mu[keep]) / sigma[keep]
    return Xs


class _Fitted:
    """Common plumbing shared by all trained handles."""

    task: str
    n_features: int
    n_classes: int
    first_seen: np.ndarray | None

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} columns, got "
                             f"{X.shape[1] if X.ndim == 2 else 'non-matrix input'}")
        return X

    def predict(self, X) -> list[Prediction]:
        X = self._check(X)
        if X.shape[0] == 0:
            return []
        if self.task == REGRESSION:
            return [Prediction(value=float(v)) for v in self._predict_values(X)]
        probs = self._predict_probs(X)
        probs = probs / probs.sum(axis=1, keepdims=True)
        labels = _argmax_labels(probs, self.first_seen)
        return [Prediction(label=int(lab), probs=tuple(float(p) for p in row))
                for lab, row in zip(labels, probs)]


class _MajorityOrMean(_Fitted):
    def __init__(self, X, y, task, n_classes):
        self.task = task
        self.n_features = X.shape[1]
        self.n_classes = n_classes
        if task == REGRESSION:
            self.mean = float(np.mean(y))
            self.first_seen = None
        else:
            counts = np.bincount(y.astype(np.int64), minlength=n_classes)
            self.probs = counts / counts.sum()
            self.first_seen = _first_seen_order(y, n_classes)

    def _predict_values(self, X):
        return np.full(X.shape[0], self.mean)

    def _predict_probs(self, X):
        return np.tile(self.probs, (X.shape[0], 1))


class _Linear(_Fitted):
    """Ordinary least squares with a tiny ridge term against singular
    designs."""

    def __init__(self, X, y, ridge=1e-8):
        self.task = REGRESSION
        self.n_features = X.shape[1]
        self.n_classes = 0
        self.first_seen = None
        A = np.hstack([X, np.ones((X.shape[0], 1))])
        gram = A.T @ A + ridge * np.eye(A.shape[1])
        self.beta = np.linalg.solve(gram, A.T @ y)

    def _predict_values(self, X):
        return np.hstack([X, np.ones((X.shape[0], 1))]) @ self.beta


class _Logistic(_Fitted):
    """Multinomial logistic regression by full-batch gradient descent on
    train-standardized features (500 epochs, step 0.1, zero init)."""

    def __init__(self, X, y, n_classes, epochs=500, lr=0.1):
        self.task = "classification"
        self.n_features = X.shape[1]
        self.n_classes = n_classes
        self.first_seen = _first_seen_order(y, n_classes)
        self.mu, self.sigma, self.keep = _standardize_fit(X)
        if not self.keep.all():
            warnings.warn(f"logistic: dropped {int((~self.keep).sum())} zero-variance column(s)")
        Xs = _standardize_apply(X, self.mu, self.sigma, self.keep)
        Xb = np.hstack([Xs, np.ones((Xs.shape[0], 1))])
        n, d = Xb.shape
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y.astype(np.int64)] = 1.0
        W = np.zeros((d, n_classes))
        for _ in range(epochs):
            P = _softmax(Xb @ W)
            W -= lr * (Xb.T @ (P - Y)) / n
        self.W = W

    def _predict_probs(self, X):
        Xs = _standardize_apply(X, self.mu, self.sigma, self.keep)
        Xb = np.hstack([Xs, np.ones((Xs.shape[0], 1))])
        return _softmax(Xb @ self.W)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class _KNN(_Fitted):
    """k-nearest neighbours (Euclidean on train-standardized features).

    Neighbour order is total: distance, then train row index. Vote ties go
    to the tied class holding the best-ranked neighbour.
    """

    def __init__(self, X, y, task, n_classes, k=5):
        self.task = task
        self.n_features = X.shape[1]
        self.n_classes = n_classes
        self.k = min(k, X.shape[0])
        self.mu, self.sigma, self.keep = _standardize_fit(X)
        if not self.keep.all():
            warnings.warn(f"knn: dropped {int((~self.keep).sum())} zero-variance column(s)")
        self.Xs = _standardize_apply(X, self.mu, self.sigma, self.keep)
        self.y = y
        self.first_seen = _first_seen_order(y, n_classes) if task != REGRESSION else None

    def _neighbors(self, X):
        Q = _standardize_apply(X, self.mu, self.sigma, self.keep)
        if Q.shape[1] == 0:
            d2 = np.zeros((X.shape[0], self.Xs.shape[0]))
        else:
            d2 = ((Q[:, None, :] - self.Xs[None, :, :]) ** 2).sum(axis=2)
        idx = np.arange(self.Xs.shape[0])
        order = np.lexsort((np.broadcast_to(idx, d2.shape), d2), axis=1)
        return order[:, :self.k]

    def predict(self, X) -> list[Prediction]:
        X = self._check(X)
        if X.shape[0] == 0:
            return []
        nn = self._neighbors(X)
        if self.task == REGRESSION:
            return [Prediction(value=float(v)) for v in self.y[nn].mean(axis=1)]
        labels_train = self.y.astype(np.int64)
        out = []
        for row in nn:
            votes = np.bincount(labels_train[row], minlength=self.n_classes)
            winners = np.flatnonzero(votes == votes.max())
            if len(winners) > 1:
                # vote tie: the tied class holding the best-ranked neighbour
                # wins, which is invariant under class relabeling
                best_rank = {c: min(r for r, j in enumerate(row) if labels_train[j] == c)
                             for c in winners}
                label = int(min(winners, key=lambda c: best_rank[c]))
            else:
                label = int(winners[0])
            probs = votes / votes.sum()
            out.append(Prediction(label=label, probs=tuple(float(p) for p in probs)))
        return out


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    value: float = 0.0                 # regression leaf mean
    counts: np.ndarray | None = None   # classification leaf class counts

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X, y_codes, n_classes, min_leaf, regression, y_values=None):
    """Best (feature, threshold) by impurity decrease; scanning features in
    ascending index order makes ties deterministic.

    The classification score is built from sums of squared integer counts,
    which float64 represents exactly, so scores (and therefore tie-breaks)
    are bit-identical under any relabeling of the classes."""
    n = X.shape[0]
    best = (0.0, None, None)
    for j in range(X.shape[1]):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        cut_mask = sv[:-1] != sv[1:]
        cuts = np.flatnonzero(cut_mask) + 1  # left side size at each candidate
        cuts = cuts[(cuts >= min_leaf) & (n - cuts >= min_leaf)]
        if cuts.size == 0:
            continue
        if regression:
            yv = y_values[order]
            csum = np.cumsum(yv)
            csq = np.cumsum(yv * yv)
            nl = cuts.astype(np.float64)
            nr = n - nl
            sse_l = csq[cuts - 1] - csum[cuts - 1] ** 2 / nl
            sse_r = (csq[-1] - csq[cuts - 1]) - (csum[-1] - csum[cuts - 1]) ** 2 / nr
            parent = csq[-1] - csum[-1] ** 2 / n
            gains = (parent - sse_l - sse_r) / n
        else:
            oh = np.zeros((n, n_classes))
            oh[np.arange(n), y_codes[order]] = 1.0
            cum = np.cumsum(oh, axis=0)
            lc = cum[cuts - 1]              # exact integer-valued counts
            rc = cum[-1] - lc
            nl = cuts.astype(np.float64)
            nr = n - nl
            sq_l = (lc * lc).sum(axis=1)    # exact: integers below 2**53
            sq_r = (rc * rc).sum(axis=1)
            sq_p = (cum[-1] * cum[-1]).sum()
            # n * gini decrease == sq_l/nl + sq_r/nr - sq_p/n
            gains = sq_l / nl + sq_r / nr - sq_p / n
        pos = int(np.argmax(gains))
        if gains[pos] > best[0]:
            cut = cuts[pos]
            thr = (sv[cut - 1] + sv[cut]) / 2.0
            best = (float(gains[pos]), j, thr)
    return best


class _Cart(_Fitted):
    """CART: Gini impurity for classification, MSE for regression."""

    def __init__(self, X, y, task, n_classes, max_depth=6, min_leaf=2):
        self.task = task
        self.n_features = X.shape[1]
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        regression = task == REGRESSION
        self.first_seen = None if regression else _first_seen_order(y, n_classes)
        self.root = self._grow(X, y, depth=0, regression=regression)

    def _grow(self, X, y, depth, regression):
        node = _TreeNode()
        if regression:
            node.value = float(np.mean(y))
        else:
            node.counts = np.bincount(y.astype(np.int64), minlength=self.n_classes).astype(np.float64)
        pure = (np.ptp(y) == 0.0) if regression else (len(np.unique(y)) == 1)
        if depth >= self.max_depth or X.shape[0] < 2 * self.min_leaf or pure:
            return node
        if regression:
            gain, j, thr = _best_split(X, None, 0, self.min_leaf, True, y_values=y)
        else:
            gain, j, thr = _best_split(X, y.astype(np.int64), self.n_classes,
                                       self.min_leaf, False)
        if j is None or gain <= 0.0:
            return node
        mask = X[:, j] <= thr
        node.feature = j
        node.threshold = thr
        node.left = self._grow(X[mask], y[mask], depth + 1, regression)
        node.right = self._grow(X[~mask], y[~mask], depth + 1, regression)
        return node

    def _leaf(self, x):
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def _predict_values(self, X):
        return np.array([self._leaf(x).value for x in X])

    def _predict_probs(self, X):
        out = np.empty((X.shape[0], self.n_classes))
        for i, x in enumerate(X):
            counts = self._leaf(x).counts
            out[i] = counts / counts.sum()
        return out


class _Stump:
    """Depth-1 regression tree fitted to residuals by least squares."""

    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, X, r, min_leaf=1):
        gain, j, thr = _best_split(X, None, 0, min_leaf, True, y_values=r)
        if j is None:
            self.feature = -1
            self.left = self.right = float(np.mean(r))
            self.threshold = 0.0
        else:
            self.feature = j
            self.threshold = thr
            mask = X[:, j] <= thr
            self.left = float(np.mean(r[mask]))
            self.right = float(np.mean(r[~mask]))

    def __call__(self, X):
        if self.feature < 0:
            return np.full(X.shape[0], self.left)
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)


class _BoostedStumps(_Fitted):
    """Gradient-boosted depth-1 trees: squared loss for regression,
    softmax log loss for classification (100 rounds, shrinkage 0.1)."""

    def __init__(self, X, y, task, n_classes, rounds=100, shrinkage=0.1):
        self.task = task
        self.n_features = X.shape[1]
        self.n_classes = n_classes
        self.rounds = rounds
        self.shrinkage = shrinkage
        if task == REGRESSION:
            self.first_seen = None
            self.base = float(np.mean(y))
            F = np.full(X.shape[0], self.base)
            self.stumps = []
            for _ in range(rounds):
                stump = _Stump(X, y - F)
                self.stumps.append(stump)
                F += shrinkage * stump(X)
        else:
            self.first_seen = _first_seen_order(y, n_classes)
            n = X.shape[0]
            Y = np.zeros((n, n_classes))
            Y[np.arange(n), y.astype(np.int64)] = 1.0
            F = np.zeros((n, n_classes))
            self.stumps = []
            for _ in range(rounds):
                P = _softmax(F)
                layer = []
                for k in range(n_classes):
                    stump = _Stump(X, Y[:, k] - P[:, k])
                    layer.append(stump)
                    F[:, k] += shrinkage * stump(X)
                self.stumps.append(layer)

    def _predict_values(self, X):
        F = np.full(X.shape[0], self.base)
        for stump in self.stumps:
            F += self.shrinkage * stump(X)
        return F

    def _predict_probs(self, X):
        F = np.zeros((X.shape[0], self.n_classes))
        for layer in self.stumps:
            for k, stump in enumerate(layer):
                F[:, k] += self.shrinkage * stump(X)
        return _softmax(F)


def fit(spec: ModelSpec, X, y, task: str, n_classes: int | None = None):
    """Train a model of ``spec.kind`` and return an opaque handle for
    :func:`predict`. Deterministic for a fixed seed.

    A logistic spec on single-class training data falls back to the
    majority baseline with a warning; task-incompatible specs are rejected.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("train matrix must be 2-d and nonempty")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise ValueError("targets length differs from matrix rows")
    if not supports(spec.kind, task):
        raise ValueError(f"model kind {spec.kind!r} does not support task {task!r}")

    hp = spec.hyperparameters
    if task == REGRESSION:
        n_classes = 0
        if spec.kind == MAJORITY_OR_MEAN:
            return _MajorityOrMean(X, y.astype(np.float64), task, 0)
        if spec.kind == LINEAR:
            return _Linear(X, y.astype(np.float64), ridge=hp.get("ridge", 1e-8))
        if spec.kind == KNN:
            return _KNN(X, y.astype(np.float64), task, 0, k=hp.get("k", 5))
        if spec.kind == CART:
            return _Cart(X, y.astype(np.float64), task, 0,
                         max_depth=hp.get("max_depth", 6), min_leaf=hp.get("min_leaf", 2))
        return _BoostedStumps(X, y.astype(np.float64), task, 0,
                              rounds=hp.get("rounds", 100),
                              shrinkage=hp.get("shrinkage", 0.1))

    y = y.astype(np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if spec.kind == LOGISTIC and len(np.unique(y)) < 2:
        warnings.warn("logistic: single-class training targets, "
                      "falling back to the majority baseline")
        return _MajorityOrMean(X, y, task, n_classes)
    if spec.kind == MAJORITY_OR_MEAN:
        return _MajorityOrMean(X, y, task, n_classes)
    if spec.kind == LOGISTIC:
        return _Logistic(X, y, n_classes,
                         epochs=hp.get("epochs", 500), lr=hp.get("lr", 0.1))
    if spec.kind == KNN:
        return _KNN(X, y, task, n_classes, k=hp.get("k", 5))
    if spec.kind == CART:
        return _Cart(X, y, task, n_classes,
                     max_depth=hp.get("max_depth", 6), min_leaf=hp.get("min_leaf", 2))
    return _BoostedStumps(X, y, task, n_classes,
                          rounds=hp.get("rounds", 100),
                          shrinkage=hp.get("shrinkage", 0.1))


def predict(handle, X) -> list[Prediction]:
    """One Prediction per row; a pure function of (handle, rows)."""
    return handle.predict(X)


def fit_upper_bound(spec: ModelSpec, split: DataSplit, removed,
                    strategy: str = MEAN_MODE, seed: int = 0):
    """Retrain on the training split with ``removed`` columns imputed by the
    train recipe, i.e. on the same representation the shifted test rows
    will have. Encoded with the original train-fitted mapping."""
    recipe = fit_recipe(split.train, strategy)
    imputed_train = apply_recipe(split.train, removed, recipe, seed=seed)
    encoder = fit_encoder(split.train)
    X, y = encoder.transform(imputed_train)
    return fit(spec, X, y, split.train.task, n_classes=encoder.n_classes or None)
