"""Binary classifiers built from first principles: KNN, CART tree, forest.

Estimators follow the scikit-learn fit/predict + get_params convention so
they compose with the wider ecosystem, but all learning logic is implemented
here; scikit-learn supplies only the estimator-API plumbing.

Determinism contract: identical hyperparameters (including seed) and
identical training data give identical predictions everywhere. Forest
randomness (bootstrap resamples, per-split feature draws) comes from
counter-based Philox streams derived from (seed, tree_index), fixed across
platforms.

Tie rules, chosen up front because tiny datasets make ties likely:
  - KNN neighbors are ordered by (distance, label), so equal-distance ties
    resolve toward label 0; an even vote falls back to the first neighbor
    in that order (the nearest, label 0 on a distance tie).
  - Tree splits: lowest weighted Gini wins, then lowest feature index,
    then smallest threshold. Leaf and forest majority ties go to label 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .seeding import derive_generator

MODEL_FORMAT = "fengshui-model"
MODEL_VERSION = 1

MODEL_KINDS = ("knn", "decision_tree", "random_forest")


class ModelError(ValueError):
    pass


class EmptyTrainingSet(ModelError):
    pass


class FeatureNameMismatch(ModelError):
    pass


class EmptyNode(ModelError):
    pass


def gini(counts: tuple[int, int]) -> float:
    """Gini impurity 1 - p0^2 - p1^2 of a (label-0, label-1) count pair."""
    n0, n1 = counts
    total = n0 + n1
    if total < 1:
        raise EmptyNode("impurity of an empty node is undefined")
    p0 = n0 / total
    p1 = n1 / total
    return 1.0 - p0 * p0 - p1 * p1


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ModelError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ModelError("feature matrix contains non-finite values")
    return X


def _check_training(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = _as_matrix(X)
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(X):
        raise ModelError(f"labels shape {y.shape} does not match {len(X)} rows")
    if len(X) == 0:
        raise EmptyTrainingSet("no training rows")
    if not np.all(np.isin(y, (0, 1))):
        raise ModelError("labels must be 0 or 1")
    return X, y.astype(int)


def _majority(labels: np.ndarray) -> int:
    # ties toward label 0
    ones = int(labels.sum())
    return 1 if 2 * ones > len(labels) else 0


class KnnClassifier(BaseEstimator, ClassifierMixin):
    """k-nearest-neighbor vote on (optionally standardized) Euclidean distance.

    Standardization uses training mean and population std per feature;
    zero-variance features contribute zero distance.
    """

    def __init__(self, k=3, standardize=True):
        self.k = k
        self.standardize = standardize

    def fit(self, X, y):
        if self.k < 1:
            raise ModelError(f"k must be >= 1, got {self.k}")
        X, y = _check_training(X, y)
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            mean = X.mean(axis=0)
            std = X.std(axis=0)
            # max == min detects constant columns exactly; std can round to
            # a tiny nonzero value for them and would explode the scale
            constant = (X.max(axis=0) == X.min(axis=0)) | (std == 0.0)
            weight = np.where(constant, 0.0, 1.0)
            scale = np.where(constant, 1.0, std)
        else:
            mean = np.zeros(X.shape[1])
            scale = np.ones(X.shape[1])
            weight = np.ones(X.shape[1])
        self.mean_ = mean
        self.scale_ = scale
        self.weight_ = weight
        self.X_ = (X - mean) / scale
        self.y_ = y
        return self

    def _predict_one(self, x: np.ndarray) -> int:
        z = (x - self.mean_) / self.scale_
        diff = (self.X_ - z) * self.weight_
        dists = np.sqrt(np.sum(diff * diff, axis=1))
        order = np.lexsort((self.y_, dists))  # distance first, then label
        k_eff = min(self.k, len(order))
        votes = self.y_[order[:k_eff]]
        ones = int(votes.sum())
        if 2 * ones > k_eff:
            return 1
        if 2 * ones < k_eff:
            return 0
        return int(self.y_[order[0]])

    def predict(self, X):
        check_is_fitted(self, "X_")
        X = _as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise FeatureNameMismatch(
                f"query has {X.shape[1]} features, model was fit on {self.n_features_in_}"
            )
        return np.array([self._predict_one(x) for x in X], dtype=int)


@dataclass(frozen=True)
class _TreeNode:
    label: int | None = None
    feature: int | None = None
    threshold: float | None = None
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    def is_leaf(self) -> bool:
        return self.label is not None


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_indices: np.ndarray,
    min_leaf: int,
) -> tuple[float, int, float] | None:
    """Lowest-weighted-Gini split among candidate features, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties resolve to the lowest feature index, then the smallest
    threshold (features are scanned ascending and first-win comparison is
    strict, so both fall out naturally).
    """
    n = len(y)
    total1 = int(y.sum())
    best: tuple[float, int, float] | None = None
    for j in feature_indices:
        v = X[:, j]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[order]
        cut = np.nonzero(sv[1:] != sv[:-1])[0] + 1  # left sizes
        if cut.size == 0:
            continue
        if min_leaf > 1:
            cut = cut[(cut >= min_leaf) & (n - cut >= min_leaf)]
            if cut.size == 0:
                continue
        c1 = np.cumsum(sy)
        nl = cut.astype(float)
        nr = n - nl
        l1 = c1[cut - 1].astype(float)
        l0 = nl - l1
        r1 = total1 - l1
        r0 = nr - r1
        gl = 1.0 - (l0 / nl) ** 2 - (l1 / nl) ** 2
        gr = 1.0 - (r0 / nr) ** 2 - (r1 / nr) ** 2
        weighted = (nl * gl + nr * gr) / n
        pos = int(np.argmin(weighted))  # first minimum: smallest threshold
        threshold = float((sv[cut[pos] - 1] + sv[cut[pos]]) / 2.0)
        candidate = (float(weighted[pos]), int(j), threshold)
        if best is None or candidate[0] < best[0]:
            best = candidate
    return best


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int | None,
    min_leaf: int,
    features_per_split: int | None,
    rng: np.random.Generator | None,
) -> _TreeNode:
    if len(set(y.tolist())) == 1:
        return _TreeNode(label=int(y[0]))
    if max_depth is not None and depth >= max_depth:
        return _TreeNode(label=_majority(y))

    d = X.shape[1]
    if features_per_split is None or features_per_split >= d:
        feature_indices = np.arange(d)
    else:
        chosen = rng.choice(d, size=features_per_split, replace=False)
        feature_indices = np.sort(chosen)

    split = _best_split(X, y, feature_indices, min_leaf)
    if split is None:
        return _TreeNode(label=_majority(y))
    _, feature, threshold = split
    mask = X[:, feature] <= threshold
    left = _grow_tree(X[mask], y[mask], depth + 1, max_depth, min_leaf,
                      features_per_split, rng)
    right = _grow_tree(X[~mask], y[~mask], depth + 1, max_depth, min_leaf,
                       features_per_split, rng)
    return _TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _tree_predict_one(node: _TreeNode, x: np.ndarray) -> int:
    while not node.is_leaf():
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


class DecisionTreeClassifier(BaseEstimator, ClassifierMixin):
    """Greedy CART: Gini impurity, midpoint thresholds, no pruning.

    Splitting continues while a node is impure and any legal split exists,
    so with unlimited depth and min_leaf=1 the tree fits any training set
    whose duplicated points agree on their label.
    """

    def __init__(self, max_depth=None, min_leaf=1):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y):
        if self.min_leaf < 1:
            raise ModelError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ModelError(f"max_depth must be >= 0, got {self.max_depth}")
        X, y = _check_training(X, y)
        self.n_features_in_ = X.shape[1]
        self.root_ = _grow_tree(X, y, 0, self.max_depth, self.min_leaf, None, None)
        return self

    def predict(self, X):
        check_is_fitted(self, "root_")
        X = _as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise FeatureNameMismatch(
                f"query has {X.shape[1]} features, model was fit on {self.n_features_in_}"
            )
        return np.array([_tree_predict_one(self.root_, x) for x in X], dtype=int)


class RandomForestClassifier(BaseEstimator, ClassifierMixin):
    """Bagged CART trees with per-split feature subsampling.

    With n_trees=1, bootstrap=False and all features per split the forest
    consumes no randomness and reproduces the plain decision tree exactly.
    """

    def __init__(self, n_trees=100, features_per_split="sqrt", bootstrap=True,
                 max_depth=None, min_leaf=1, seed=0):
        self.n_trees = n_trees
        self.features_per_split = features_per_split
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed

    def _resolve_features_per_split(self, d: int) -> int | None:
        if self.features_per_split == "sqrt":
            return max(1, math.isqrt(d))
        m = int(self.features_per_split)
        if not (1 <= m <= d):
            raise ModelError(f"features_per_split must be in 1..{d}, got {m}")
        return None if m >= d else m

    def fit(self, X, y):
        if self.n_trees < 1:
            raise ModelError(f"n_trees must be >= 1, got {self.n_trees}")
        X, y = _check_training(X, y)
        self.n_features_in_ = X.shape[1]
        m = self._resolve_features_per_split(X.shape[1])
        n = len(y)
        trees = []
        for t in range(self.n_trees):
            rng = derive_generator(self.seed, t)
            if self.bootstrap:
                idx = rng.integers(0, n, size=n)
                Xt, yt = X[idx], y[idx]
            else:
                Xt, yt = X, y
            trees.append(
                _grow_tree(Xt, yt, 0, self.max_depth, self.min_leaf, m, rng)
            )
        self.trees_ = trees
        return self

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = _as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise FeatureNameMismatch(
                f"query has {X.shape[1]} features, model was fit on {self.n_features_in_}"
            )
        out = np.empty(len(X), dtype=int)
        for i, x in enumerate(X):
            ones = sum(_tree_predict_one(tree, x) for tree in self.trees_)
            out[i] = 1 if 2 * ones > len(self.trees_) else 0
        return out


@dataclass(frozen=True)
class ModelSpec:
    """Serializable model configuration mirroring the estimator parameters."""

    kind: str
    knn_k: int = 3
    standardize_features: bool = True
    tree_max_depth: int | None = None
    tree_min_leaf: int = 1
    forest_n_trees: int = 100
    forest_features_per_split: int | str = "sqrt"
    forest_bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.knn_k < 1:
            raise ModelError(f"knn_k must be >= 1, got {self.knn_k}")
        if self.tree_min_leaf < 1:
            raise ModelError(f"tree_min_leaf must be >= 1, got {self.tree_min_leaf}")
        if self.forest_n_trees < 1:
            raise ModelError(f"forest_n_trees must be >= 1, got {self.forest_n_trees}")
        if self.forest_features_per_split != "sqrt":
            if int(self.forest_features_per_split) < 1:
                raise ModelError("forest_features_per_split must be >= 1 or 'sqrt'")

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=seed)


def build_estimator(spec: ModelSpec):
    if spec.kind == "knn":
        return KnnClassifier(k=spec.knn_k, standardize=spec.standardize_features)
    if spec.kind == "decision_tree":
        return DecisionTreeClassifier(max_depth=spec.tree_max_depth,
                                      min_leaf=spec.tree_min_leaf)
    return RandomForestClassifier(
        n_trees=spec.forest_n_trees,
        features_per_split=spec.forest_features_per_split,
        bootstrap=spec.forest_bootstrap,
        max_depth=spec.tree_max_depth,
        min_leaf=spec.tree_min_leaf,
        seed=spec.seed,
    )


def _feature_mapping(vector) -> dict:
    """Accept either a plain name->value dict or a FeatureVector."""
    if isinstance(vector, dict):
        return vector
    values = getattr(vector, "values", None)
    if isinstance(values, dict):
        return values
    raise FeatureNameMismatch(
        f"expected a feature mapping, got {type(vector).__name__}"
    )


@dataclass(frozen=True)
class TrainedModel:
    """A fitted estimator bound to the ordered feature names it was fit on."""

    spec: ModelSpec
    feature_names: tuple[str, ...]
    estimator: object = field(compare=False)

    def _project(self, vector) -> np.ndarray:
        values = _feature_mapping(vector)
        try:
            return np.array([values[name] for name in self.feature_names], dtype=float)
        except KeyError as exc:
            raise FeatureNameMismatch(f"vector lacks feature {exc.args[0]!r}") from exc

    def predict(self, vector) -> int:
        return int(self.estimator.predict(self._project(vector).reshape(1, -1))[0])

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.predict(X)


def fit(spec: ModelSpec, rows) -> TrainedModel:
    """Fit spec on rows of (feature mapping, 0/1 label).

    Every row must carry exactly the same feature names; the first row fixes
    their order. Single-class training is allowed and predicts that class.
    """
    rows = list(rows)
    if not rows:
        raise EmptyTrainingSet("no training rows")
    names = tuple(_feature_mapping(rows[0][0]).keys())
    X = np.empty((len(rows), len(names)), dtype=float)
    y = np.empty(len(rows), dtype=int)
    for i, (vector, label) in enumerate(rows):
        values = _feature_mapping(vector)
        if tuple(values.keys()) != names:
            raise FeatureNameMismatch(
                f"row {i} feature names {tuple(values.keys())} != {names}"
            )
        X[i] = [values[n] for n in names]
        y[i] = label
    estimator = build_estimator(spec).fit(X, y)
    return TrainedModel(spec=spec, feature_names=names, estimator=estimator)


# --- serialization ---

def _node_to_dict(node: _TreeNode) -> dict:
    if node.is_leaf():
        return {"label": node.label}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict) -> _TreeNode:
    if "label" in doc:
        return _TreeNode(label=int(doc["label"]))
    return _TreeNode(
        feature=int(doc["feature"]),
        threshold=float(doc["threshold"]),
        left=_node_from_dict(doc["left"]),
        right=_node_from_dict(doc["right"]),
    )


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "kind": spec.kind,
        "knn_k": spec.knn_k,
        "standardize_features": spec.standardize_features,
        "tree_max_depth": spec.tree_max_depth,
        "tree_min_leaf": spec.tree_min_leaf,
        "forest_n_trees": spec.forest_n_trees,
        "forest_features_per_split": spec.forest_features_per_split,
        "forest_bootstrap": spec.forest_bootstrap,
        "seed": spec.seed,
    }


def spec_from_dict(doc: dict) -> ModelSpec:
    return ModelSpec(**doc)


def model_to_json(model: TrainedModel) -> str:
    est = model.estimator
    if model.spec.kind == "knn":
        state = {
            "mean": est.mean_.tolist(),
            "scale": est.scale_.tolist(),
            "weight": est.weight_.tolist(),
            "X": est.X_.tolist(),
            "y": est.y_.tolist(),
        }
    elif model.spec.kind == "decision_tree":
        state = {"root": _node_to_dict(est.root_)}
    else:
        state = {"trees": [_node_to_dict(t) for t in est.trees_]}
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": spec_to_dict(model.spec),
        "feature_names": list(model.feature_names),
        "n_features": est.n_features_in_,
        "state": state,
    }
    return json.dumps(doc) + "\n"


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ModelError(f"unrecognized model format {doc.get('format')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version {doc.get('version')!r}")
    spec = spec_from_dict(doc["spec"])
    estimator = build_estimator(spec)
    estimator.n_features_in_ = int(doc["n_features"])
    state = doc["state"]
    if spec.kind == "knn":
        estimator.mean_ = np.array(state["mean"], dtype=float)
        estimator.scale_ = np.array(state["scale"], dtype=float)
        estimator.weight_ = np.array(state["weight"], dtype=float)
        estimator.X_ = np.array(state["X"], dtype=float)
        estimator.y_ = np.array(state["y"], dtype=int)
    elif spec.kind == "decision_tree":
        estimator.root_ = _node_from_dict(state["root"])
    else:
        estimator.trees_ = [_node_from_dict(t) for t in state["trees"]]
    return TrainedModel(
        spec=spec,
        feature_names=tuple(doc["feature_names"]),
        estimator=estimator,
    )
