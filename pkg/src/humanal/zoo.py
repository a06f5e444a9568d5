"""Pool of binary classifiers behind one fit / predict_proba surface.

All estimators are implemented here on top of numpy. A model is fully
determined by its spec (hyperparameters + seed) and the training data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import ClassVar, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import expit

from .errors import ConfigError, DegenerateTrainingSet, MaskMismatch
from .features import FeatureMask, FeatureMatrix, FeatureVector

FORMAT_VERSION = 1


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class ModelSpec:
    seed: int = field(default=0, kw_only=True)

    kind: ClassVar[str] = ""

    def hyperparameters(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "seed"}

    def validate(self) -> None:
        for name, value in self.hyperparameters().items():
            if isinstance(value, bool):
                continue
            if isinstance(value, (int, float)) and not value > 0:
                raise ConfigError(f"{self.kind}: {name} must be positive, got {value!r}")

    def describe(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.hyperparameters().items())
        return f"{self.kind}({params})"


@dataclass(frozen=True)
class KNN(ModelSpec):
    k: int = 15
    kind: ClassVar[str] = "knn"


@dataclass(frozen=True)
class GaussianNB(ModelSpec):
    var_smoothing: float = 1e-9
    kind: ClassVar[str] = "gaussian_nb"


@dataclass(frozen=True)
class LogisticSGD(ModelSpec):
    learning_rate: float = 0.1
    epochs: int = 10
    l2: float = 1e-4
    batch_size: int = 64
    kind: ClassVar[str] = "logistic_sgd"


@dataclass(frozen=True)
class DecisionTree(ModelSpec):
    max_depth: int = 5
    min_leaf: int = 5
    kind: ClassVar[str] = "decision_tree"


@dataclass(frozen=True)
class RandomForest(ModelSpec):
    n_trees: int = 10
    max_depth: int = 5
    feature_subsample: float = 0.6
    min_leaf: int = 5
    bootstrap: bool = True
    kind: ClassVar[str] = "random_forest"

    def validate(self) -> None:
        super().validate()
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ConfigError(f"feature_subsample must lie in (0, 1], got {self.feature_subsample}")


@dataclass(frozen=True)
class AdaBoostStumps(ModelSpec):
    n_rounds: int = 30
    kind: ClassVar[str] = "adaboost_stumps"


@dataclass(frozen=True)
class Constant(ModelSpec):
    label: int = 1
    kind: ClassVar[str] = "constant"

    def validate(self) -> None:
        if self.label not in (0, 1):
            raise ConfigError(f"constant label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class MajorityClass(ModelSpec):
    kind: ClassVar[str] = "majority_class"


SPEC_TYPES: dict[str, type[ModelSpec]] = {
    cls.kind: cls for cls in (KNN, GaussianNB, LogisticSGD, DecisionTree, RandomForest,
                              AdaBoostStumps, Constant, MajorityClass)
}

# Order matters: on equal CV accuracy the earliest entry wins.
DEFAULT_POOL: tuple[ModelSpec, ...] = (
    DecisionTree(),
    LogisticSGD(),
    GaussianNB(),
    KNN(),
    RandomForest(),
    AdaBoostStumps(),
)


def spec_from_dict(d: dict) -> ModelSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in SPEC_TYPES:
        raise ConfigError(f"unknown classifier kind {kind!r}; expected one of {sorted(SPEC_TYPES)}")
    cls = SPEC_TYPES[kind]
    allowed = {f.name for f in fields(cls)}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{kind}: unknown hyperparameter(s) {sorted(unknown)}")
    spec = cls(**d)
    spec.validate()
    return spec


def spec_to_dict(spec: ModelSpec) -> dict:
    return {"kind": spec.kind, **spec.hyperparameters(), "seed": spec.seed}


# ---------------------------------------------------------------- estimators


def _standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


class _Estimator:
    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator):
        raise NotImplementedError

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()}

    @classmethod
    def from_state(cls, spec, state: dict):
        est = cls(spec)
        for k, v in state.items():
            setattr(est, k, np.asarray(v) if isinstance(v, list) else v)
        return est


class _ConstantEst(_Estimator):
    def __init__(self, spec):
        self.p = float(getattr(spec, "label", 1))

    def fit(self, X, y, rng):
        if isinstance(self, _MajorityEst):
            self.p = 1.0 if y.mean() >= 0.5 else 0.0
        return self

    def predict_proba(self, X):
        return np.full(X.shape[0], self.p)


class _MajorityEst(_ConstantEst):
    pass


class _KNNEst(_Estimator):
    """k nearest neighbours on standardized features; the vote includes every
    training point tied with the k-th nearest distance."""

    def __init__(self, spec):
        self.k = spec.k

    def fit(self, X, y, rng):
        self.mean, self.std = _standardizer(X)
        self.X = (X - self.mean) / self.std
        self.y = y.astype(float)
        return self

    def predict_proba(self, X):
        Z = (X - self.mean) / self.std
        n = len(self.y)
        k = min(self.k, n)
        extra = min(n, k + 4)
        tree = cKDTree(self.X)
        dist, nbr = tree.query(Z, k=extra)
        dist, nbr = dist.reshape(len(Z), extra), nbr.reshape(len(Z), extra)
        kth = dist[:, k - 1]
        cut = kth + 1e-9 * (1.0 + kth)
        near = dist <= cut[:, None]
        out = (near * self.y[nbr]).sum(axis=1) / near.sum(axis=1)
        # Rows whose ties run past the queried neighbours are scored exhaustively.
        spill = np.flatnonzero(near[:, -1]) if extra < n else np.zeros(0, dtype=np.int64)
        for i in spill:
            d = np.sqrt(np.sum((self.X - Z[i]) ** 2, axis=1))
            sel = d <= cut[i]
            out[i] = self.y[sel].mean()
        return out


class _GaussianNBEst(_Estimator):
    def __init__(self, spec):
        self.var_smoothing = spec.var_smoothing

    def fit(self, X, y, rng):
        eps = max(self.var_smoothing * float(X.var(axis=0).max(initial=0.0)), 1e-12)
        self.theta = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var = np.stack([X[y == c].var(axis=0) for c in (0, 1)]) + eps
        self.log_prior = np.log(np.array([np.mean(y == 0), np.mean(y == 1)]))
        return self

    def _joint(self, X, c):
        return (self.log_prior[c] - 0.5 * np.sum(np.log(2.0 * np.pi * self.var[c]))
                - 0.5 * np.sum((X - self.theta[c]) ** 2 / self.var[c], axis=1))

    def predict_proba(self, X):
        return expit(self._joint(X, 1) - self._joint(X, 0))


class _LogisticSGDEst(_Estimator):
    """Logistic regression trained by shuffled mini-batch SGD on standardized inputs."""

    def __init__(self, spec):
        self.learning_rate = spec.learning_rate
        self.epochs = spec.epochs
        self.l2 = spec.l2
        self.batch_size = spec.batch_size

    def fit(self, X, y, rng):
        self.mean, self.std = _standardizer(X)
        Z = (X - self.mean) / self.std
        n, d = Z.shape
        w = np.zeros(d)
        b = 0.0
        yf = y.astype(float)
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                err = expit(Z[idx] @ w + b) - yf[idx]
                w -= self.learning_rate * (Z[idx].T @ err / len(idx) + self.l2 * w)
                b -= self.learning_rate * float(err.mean())
        self.w, self.b = w, b
        return self

    def predict_proba(self, X):
        return expit(((X - self.mean) / self.std) @ self.w + self.b)


def _best_split(X, y, w, ords, features, min_leaf):
    """Lowest weighted-Gini split of one node.

    ``ords`` holds the node's row indices sorted by each feature, shape
    (d, m); ``w`` are row weights (bootstrap counts). Returns
    (gini, feature, threshold) or None. Ties keep the earliest feature and,
    within a feature, the lowest threshold.
    """
    feats = np.asarray(features, dtype=np.int64)
    sub = ords[feats]
    xs = X[sub, feats[:, None]]
    ws = w[sub]
    cw = np.cumsum(ws, axis=1)
    cy = np.cumsum(ws * y[sub], axis=1)
    total, pos = cw[0, -1], cy[0, -1]
    nl, pl = cw[:, :-1], cy[:, :-1]
    nr, pr = total - nl, pos - pl
    valid = (nl >= min_leaf) & (nr >= min_leaf) & (xs[:, :-1] != xs[:, 1:])
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        fl, fr = pl / nl, pr / nr
        gini = (nl * 2.0 * fl * (1.0 - fl) + nr * 2.0 * fr * (1.0 - fr)) / total
    gini = np.where(valid, gini, np.inf)
    j, i = divmod(int(np.argmin(gini)), gini.shape[1])
    thr = 0.5 * (xs[j, i] + xs[j, i + 1])
    if thr >= xs[j, i + 1]:
        thr = xs[j, i]
    return float(gini[j, i]), int(feats[j]), float(thr)


def _grow_tree(X, y, max_depth, min_leaf, n_sub, rng, weights=None, order=None):
    n, d = X.shape
    y = y.astype(float)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(ords):
        rows = ords[0]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.dot(w[rows], y[rows]) / w[rows].sum()))
        return len(feature) - 1

    if order is None:
        order = np.argsort(X, axis=0, kind="stable").T
    keep = w[order] > 0
    root = order[keep].reshape(d, int(keep[0].sum()))  # (d, m) row indices sorted per feature
    all_feats = np.arange(d)
    stack = [(new_node(root), root, 0)]
    go_left = np.zeros(n, dtype=bool)
    while stack:
        node, ords, depth = stack.pop()
        p = value[node]
        parent_gini = 2.0 * p * (1.0 - p)
        if depth >= max_depth or parent_gini == 0.0 or w[ords[0]].sum() < 2 * min_leaf:
            continue
        feats = all_feats if n_sub >= d else np.sort(rng.choice(d, n_sub, replace=False))
        split = _best_split(X, y, w, ords, feats, min_leaf)
        if split is None or not split[0] < parent_gini:
            continue
        _, f, thr = split
        rows = ords[0]
        go_left[rows] = X[rows, f] <= thr
        sel = go_left[ords]
        n_left = int(sel[0].sum())
        lo = ords[sel].reshape(d, n_left)
        ro = ords[~sel].reshape(d, ords.shape[1] - n_left)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(lo), new_node(ro)
        # Right pushed first so the left subtree is numbered first.
        stack.append((right[node], ro, depth + 1))
        stack.append((left[node], lo, depth + 1))
    return {"feature": np.array(feature, dtype=np.int64), "threshold": np.array(threshold),
            "left": np.array(left, dtype=np.int64), "right": np.array(right, dtype=np.int64),
            "value": np.array(value)}


def _tree_proba(tree, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    feat = tree["feature"]
    while True:
        f = feat[node]
        inner = f >= 0
        if not inner.any():
            return tree["value"][node]
        rows = np.flatnonzero(inner)
        go_left = X[rows, f[rows]] <= tree["threshold"][node[rows]]
        node[rows] = np.where(go_left, tree["left"][node[rows]], tree["right"][node[rows]])


class _TreeEst(_Estimator):
    def __init__(self, spec):
        self.max_depth = spec.max_depth
        self.min_leaf = spec.min_leaf

    def fit(self, X, y, rng):
        self.tree = _grow_tree(X, y, self.max_depth, self.min_leaf, X.shape[1], rng)
        return self

    def predict_proba(self, X):
        return _tree_proba(self.tree, X)

    def state(self):
        return {"tree": {k: v.tolist() for k, v in self.tree.items()}}

    @classmethod
    def from_state(cls, spec, state):
        est = cls(spec)
        est.tree = _tree_from_lists(state["tree"])
        return est


def _tree_from_lists(t):
    return {"feature": np.asarray(t["feature"], dtype=np.int64), "threshold": np.asarray(t["threshold"], dtype=float),
            "left": np.asarray(t["left"], dtype=np.int64), "right": np.asarray(t["right"], dtype=np.int64),
            "value": np.asarray(t["value"], dtype=float)}


class _ForestEst(_Estimator):
    """Bagged Gini trees with per-node feature subsampling.

    A single-tree forest is trained on the full sample (no bootstrap), so it
    coincides with a DecisionTree of the same depth when no features are
    subsampled.
    """

    def __init__(self, spec):
        self.n_trees = spec.n_trees
        self.max_depth = spec.max_depth
        self.min_leaf = spec.min_leaf
        self.feature_subsample = spec.feature_subsample
        self.bootstrap = spec.bootstrap

    def fit(self, X, y, rng):
        n, d = X.shape
        n_sub = max(1, int(round(self.feature_subsample * d)))
        self.trees = []
        order = np.argsort(X, axis=0, kind="stable").T
        for _ in range(self.n_trees):
            counts = None
            if self.bootstrap and self.n_trees > 1:
                counts = np.bincount(rng.integers(0, n, n), minlength=n)
            self.trees.append(_grow_tree(X, y, self.max_depth, self.min_leaf, n_sub, rng, counts, order))
        return self

    def predict_proba(self, X):
        return np.mean([_tree_proba(t, X) for t in self.trees], axis=0)

    def state(self):
        return {"trees": [{k: v.tolist() for k, v in t.items()} for t in self.trees]}

    @classmethod
    def from_state(cls, spec, state):
        est = cls(spec)
        est.trees = [_tree_from_lists(t) for t in state["trees"]]
        return est


class _AdaBoostEst(_Estimator):
    """Discrete AdaBoost over one-split stumps; the score is the alpha-weighted
    fraction of stumps voting for class 1."""

    def __init__(self, spec):
        self.n_rounds = spec.n_rounds

    def fit(self, X, y, rng):
        n, d = X.shape
        orders = np.argsort(X, axis=0, kind="stable").T  # (d, n)
        xs = np.take_along_axis(X.T, orders, axis=1)
        signed = np.where(y[orders] == 1, 1.0, -1.0)
        valid = xs[:, :-1] != xs[:, 1:]
        w = np.full(n, 1.0 / n)
        sign = np.where(y == 1, 1.0, -1.0)
        feats, thrs, left_lab, right_lab, alphas = [], [], [], [], []
        if valid.any():
            for _ in range(self.n_rounds):
                # Error of "left -> 0, right -> 1" is neg_total + (pos_left - neg_left);
                # the mirrored stump errs on the complement.
                neg_t = float(w[y == 0].sum())
                err_a = neg_t + np.cumsum(w[orders] * signed, axis=1)[:, :-1]
                ia = int(np.argmin(np.where(valid, err_a, np.inf)))
                ib = int(np.argmax(np.where(valid, err_a, -np.inf)))
                ea, eb = err_a.flat[ia], 1.0 - err_a.flat[ib]
                flat, lab_l, err = (ia, 0, ea) if ea <= eb else (ib, 1, eb)
                if err >= 0.5 - 1e-12:
                    break
                f, i = divmod(flat, n - 1)
                thr = 0.5 * (xs[f, i] + xs[f, i + 1])
                if thr >= xs[f, i + 1]:
                    thr = xs[f, i]
                err = min(max(err, 1e-10), 1.0 - 1e-10)
                alpha = 0.5 * math.log((1.0 - err) / err)
                feats.append(int(f))
                thrs.append(float(thr))
                left_lab.append(lab_l)
                right_lab.append(1 - lab_l)
                alphas.append(alpha)
                h = np.where(X[:, f] <= thr, lab_l, 1 - lab_l)
                w = w * np.exp(-alpha * sign * np.where(h == 1, 1.0, -1.0))
                w /= w.sum()
                if err <= 1e-10:
                    break
        self.feature = np.array(feats, dtype=np.int64)
        self.threshold = np.array(thrs)
        self.left_label = np.array(left_lab, dtype=np.int64)
        self.right_label = np.array(right_lab, dtype=np.int64)
        self.alpha = np.array(alphas)
        self.base_rate = float(y.mean())
        return self

    def predict_proba(self, X):
        if len(self.alpha) == 0:
            return np.full(X.shape[0], self.base_rate)
        votes = np.where(X[:, self.feature] <= self.threshold, self.left_label, self.right_label)
        return (votes @ self.alpha) / self.alpha.sum()


_ESTIMATORS = {
    "knn": _KNNEst, "gaussian_nb": _GaussianNBEst, "logistic_sgd": _LogisticSGDEst,
    "decision_tree": _TreeEst, "random_forest": _ForestEst, "adaboost_stumps": _AdaBoostEst,
    "constant": _ConstantEst, "majority_class": _MajorityEst,
}


# ---------------------------------------------------------------- models


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    estimator: _Estimator
    impute_means: np.ndarray
    mask: FeatureMask | None
    n_features: int
    fallback: str | None = None

    @property
    def kind(self) -> str:
        return self.spec.kind


def _design(features):
    """Dense column block plus the mask it came from."""
    if isinstance(features, FeatureVector):
        return features.values[features.mask.columns][None, :], features.mask
    if isinstance(features, FeatureMatrix):
        return features.enabled(), features.mask
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    return X, None


def _impute(X: np.ndarray, means: np.ndarray) -> np.ndarray:
    if not np.isnan(X).any():
        return X
    return np.where(np.isnan(X), means[None, :], X)


def fit(spec: ModelSpec, features, labels) -> TrainedModel:
    """Train ``spec`` on a FeatureMatrix (or a raw 2-D array) and binary labels.

    Raises DegenerateTrainingSet when only one class is present (except for
    KNN and the constant kinds, which handle it natively).
    """
    spec.validate()
    X, mask = _design(features)
    y = np.asarray(labels).astype(np.int64)
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} feature rows but {len(y)} labels")
    if len(y) == 0:
        raise DegenerateTrainingSet("empty training set")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    classes = np.unique(y)
    if len(classes) < 2 and spec.kind not in ("knn", "constant", "majority_class"):
        raise DegenerateTrainingSet(f"{spec.kind}: training labels are all {classes[0]}", int(classes[0]))
    if len(y) < 2 and spec.kind not in ("constant", "majority_class", "knn"):
        raise DegenerateTrainingSet(f"{spec.kind}: needs at least 2 examples", int(y[0]))
    with np.errstate(all="ignore"):
        means = np.nanmean(X, axis=0) if X.shape[1] else np.zeros(0)
    means = np.where(np.isnan(means), 0.0, means)
    est = _ESTIMATORS[spec.kind](spec)
    est.fit(_impute(X, means), y, np.random.default_rng(spec.seed))
    return TrainedModel(spec, est, means, mask, X.shape[1])


def constant_model(label: int, mask: FeatureMask | None, n_features: int,
                   reason: str | None = None) -> TrainedModel:
    spec = Constant(label=int(label))
    return TrainedModel(spec, _ConstantEst(spec), np.zeros(n_features), mask, n_features, reason)


def fit_or_constant(spec: ModelSpec, features, labels) -> TrainedModel:
    """:func:`fit`, falling back to a constant predictor on a single-class set."""
    try:
        return fit(spec, features, labels)
    except DegenerateTrainingSet as exc:
        X, mask = _design(features)
        label = exc.label if exc.label is not None else 1
        return constant_model(label, mask, X.shape[1], reason=str(exc))


def predict_proba(model: TrainedModel, x):
    """Match probability for a FeatureVector (float) or a FeatureMatrix / array (vector)."""
    X, mask = _design(x)
    if model.mask is not None or mask is not None:
        if mask != model.mask:
            raise MaskMismatch(f"model trained on mask {model.mask}, got {mask}")
    if X.shape[1] != model.n_features:
        raise MaskMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    p = model.estimator.predict_proba(_impute(X, model.impute_means))
    p = np.clip(p, 0.0, 1.0)
    return float(p[0]) if isinstance(x, FeatureVector) else p


def predict(model: TrainedModel, x, threshold: float = 0.5):
    p = predict_proba(model, x)
    if isinstance(p, float):
        return int(p >= threshold)
    return (p >= threshold).astype(np.int64)


# ---------------------------------------------------------------- selection


@dataclass(frozen=True, eq=False)
class SelectionReport:
    specs: tuple[ModelSpec, ...]
    scores: tuple[float, ...]  # mean held-out accuracy per spec
    chosen_index: int
    strategy: str  # "cv" or "train"
    folds: int  # 0 when scored on the training set itself
    fold_seed: int
    fallback: str | None
    model: TrainedModel

    @property
    def chosen(self) -> ModelSpec:
        return self.specs[self.chosen_index]

    def to_dict(self) -> dict:
        return {
            "specs": [spec_to_dict(s) for s in self.specs],
            "scores": list(self.scores),
            "chosen_index": self.chosen_index,
            "chosen": spec_to_dict(self.chosen),
            "strategy": self.strategy,
            "folds": self.folds,
            "fold_seed": self.fold_seed,
            "fallback": self.fallback,
        }


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per row; each class is shuffled and dealt round-robin."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=np.int64)
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        fold[rng.permutation(idx)] = np.arange(len(idx)) % k
    return fold


def select_model(specs: Sequence[ModelSpec], features, labels, folds: int = 5,
                 seed: int = 0, strategy: str = "cv") -> SelectionReport:
    """Score each spec on the training data and refit the best one on all of it.

    ``strategy="cv"`` uses stratified k-fold accuracy, dropping to 2 folds and
    then to training-set accuracy when a class is too rare. ``"train"`` scores
    on the training set directly. Ties go to the earliest spec.
    """
    specs = tuple(specs)
    if not specs:
        raise ConfigError("empty classifier pool")
    if strategy not in ("cv", "train"):
        raise ConfigError(f"unknown selection strategy {strategy!r}")
    y = np.asarray(labels).astype(np.int64)
    X_all = features
    n_min = min(int(np.sum(y == 0)), int(np.sum(y == 1)))
    fallback = None
    k = folds
    if strategy == "cv" and n_min < folds:
        if n_min >= 2:
            k, fallback = 2, f"too few examples for {folds} folds; used 2"
        else:
            k, fallback = 0, "too few examples for cross-validation; used training accuracy"
    if strategy == "train":
        k = 0

    def rows(sel):
        return X_all.take(sel) if isinstance(X_all, FeatureMatrix) else np.asarray(X_all)[sel]

    scores = []
    if k == 0:
        for spec in specs:
            m = fit_or_constant(spec, X_all, y)
            scores.append(float(np.mean(predict(m, X_all) == y)))
    else:
        fold = stratified_folds(y, k, seed)
        for spec in specs:
            accs = []
            for f in range(k):
                tr, te = np.flatnonzero(fold != f), np.flatnonzero(fold == f)
                m = fit_or_constant(spec, rows(tr), y[tr])
                accs.append(float(np.mean(predict(m, rows(te)) == y[te])))
            scores.append(float(np.mean(accs)))
    chosen = int(np.argmax(scores))
    model = fit_or_constant(specs[chosen], X_all, y)
    return SelectionReport(specs, tuple(scores), chosen, strategy, k, seed, fallback, model)


# ---------------------------------------------------------------- serialization


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.spec.kind,
        "hyperparameters": model.spec.hyperparameters(),
        "seed": model.spec.seed,
        "mask": None if model.mask is None else list(model.mask.names),
        "n_features": model.n_features,
        "imputation_means": model.impute_means.tolist(),
        "fallback": model.fallback,
        "parameters": model.estimator.state(),
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported model format_version {d.get('format_version')!r}")
    spec = spec_from_dict({"kind": d["kind"], **d["hyperparameters"], "seed": d["seed"]})
    est = _ESTIMATORS[spec.kind].from_state(spec, d["parameters"])
    mask = None if d["mask"] is None else FeatureMask.of(*d["mask"])
    return TrainedModel(spec, est, np.asarray(d["imputation_means"], dtype=float), mask,
                        int(d["n_features"]), d.get("fallback"))


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), indent=1, sort_keys=True)


def loads_model(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))


def with_seed(spec: ModelSpec, seed: int) -> ModelSpec:
    return replace(spec, seed=int(seed))
