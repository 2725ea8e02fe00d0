"""Gradient-boosted regression trees, written from scratch.

Least-squares boosting: each tree fits the residuals of the running
prediction, grown leaf-wise to a leaf budget by exact greedy search over
sorted unique feature values.  Split gain is the sum-of-squares reduction;
thresholds sit at midpoints of adjacent distinct values; ties break to the
lower feature index, then the lower threshold.  Boosting stops early when
no split with positive gain exists, so a constant target yields an
ensemble with zero trees.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, SchemaMismatchError
from .rng import substream

FORMAT_TAG = "rankforge-gbdt/1"


@dataclass(frozen=True)
class GbdtParams:
    num_trees: int = 100
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    min_gain: float = 0.0
    feature_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ConfigError("num_trees must be >= 1")
        if self.max_leaves < 2:
            raise ConfigError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if not 0 < self.feature_fraction <= 1:
            raise ConfigError("feature_fraction must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "num_trees": self.num_trees,
            "learning_rate": self.learning_rate,
            "max_leaves": self.max_leaves,
            "min_samples_leaf": self.min_samples_leaf,
            "min_gain": self.min_gain,
            "feature_fraction": self.feature_fraction,
            "seed": self.seed,
        }


def best_split_for_feature(x: np.ndarray, residuals: np.ndarray, min_samples_leaf: int):
    """Best (gain, threshold) splitting one feature column, or None.

    Gain is the exact SSE reduction: S_l^2/n_l + S_r^2/n_r - S^2/n.
    """
    n = len(x)
    if n < 2 * min_samples_leaf:
        return None
    order = np.argsort(x, kind="stable")
    xs = x[order]
    rs = residuals[order]
    csum = np.cumsum(rs)
    total = csum[-1]
    n_left = np.arange(1, n)
    n_right = n - n_left
    valid = (
        (xs[:-1] < xs[1:])
        & (n_left >= min_samples_leaf)
        & (n_right >= min_samples_leaf)
    )
    if not valid.any():
        return None
    s_left = csum[:-1]
    gain = s_left * s_left / n_left + (total - s_left) ** 2 / n_right - total * total / n
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))  # first max = lowest threshold
    threshold = (xs[best] + xs[best + 1]) / 2.0
    return float(gain[best]), float(threshold)


class _Node:
    __slots__ = ("indices", "value", "best", "feature", "threshold", "left", "right")

    def __init__(self, indices, value):
        self.indices = indices
        self.value = value
        self.best = None  # (gain, feature, threshold)
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None


def _search_node(node, X, residuals, features, params):
    best = None
    for f in features:
        found = best_split_for_feature(
            X[node.indices, f], residuals[node.indices], params.min_samples_leaf
        )
        if found is None:
            continue
        gain, threshold = found
        if gain <= params.min_gain:
            continue
        if best is None or gain > best[0]:
            best = (gain, f, threshold)
    node.best = best


@dataclass
class FlatTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=np.int32)
        active = self.feature[idx] >= 0
        while active.any():
            cur = idx[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            idx[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[idx] >= 0
        return self.value[idx]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FlatTree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int32),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int32),
            right=np.asarray(data["right"], dtype=np.int32),
            value=np.asarray(data["value"], dtype=np.float64),
        )


def _flatten(root) -> FlatTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def visit(node) -> int:
        my_id = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if node.feature is None:
            value[my_id] = float(node.value)
        else:
            feature[my_id] = int(node.feature)
            threshold[my_id] = float(node.threshold)
            left[my_id] = visit(node.left)
            right[my_id] = visit(node.right)
        return my_id

    visit(root)
    return FlatTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )


def _grow_tree(X, residuals, features, params) -> FlatTree | None:
    root = _Node(np.arange(len(X)), float(residuals.mean()))
    _search_node(root, X, residuals, features, params)
    leaves = [root]
    while len(leaves) < params.max_leaves:
        # pick the splittable leaf with the strictly largest gain;
        # creation order breaks exact ties
        chosen = None
        for leaf in leaves:
            if leaf.best is None:
                continue
            if chosen is None or leaf.best[0] > chosen.best[0]:
                chosen = leaf
        if chosen is None:
            break
        gain, f, threshold = chosen.best
        idx = chosen.indices
        mask = X[idx, f] <= threshold
        left = _Node(idx[mask], float(residuals[idx[mask]].mean()))
        right = _Node(idx[~mask], float(residuals[idx[~mask]].mean()))
        chosen.feature = f
        chosen.threshold = threshold
        chosen.left = left
        chosen.right = right
        chosen.indices = None
        chosen.best = None
        _search_node(left, X, residuals, features, params)
        _search_node(right, X, residuals, features, params)
        leaves[leaves.index(chosen)] = left
        leaves.append(right)
    if root.feature is None:
        return None  # no split with positive gain anywhere
    return _flatten(root)


@dataclass
class TreeEnsemble:
    base_score: float
    trees: list
    params: GbdtParams
    schema_id: str = ""
    n_features: int = 0
    meta: dict = field(default_factory=dict)

    def predict_many(self, X, num_trees: int | None = None) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"expected {self.n_features} features, got shape {X.shape}"
            )
        take = self.trees if num_trees is None else self.trees[:num_trees]
        out = np.full(len(X), self.base_score, dtype=np.float64)
        for tree in take:
            out += self.params.learning_rate * tree.leaf_values(X)
        return out

    def predict(self, x) -> float:
        return float(self.predict_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "params": self.params.to_dict(),
            "schema_id": self.schema_id,
            "n_features": self.n_features,
            "base_score": self.base_score,
            "meta": self.meta,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "TreeEnsemble":
        if data.get("format") != FORMAT_TAG:
            raise DataError(f"unsupported model format {data.get('format')!r}")
        return cls(
            base_score=float(data["base_score"]),
            trees=[FlatTree.from_dict(t) for t in data["trees"]],
            params=GbdtParams(**data["params"]),
            schema_id=data.get("schema_id", ""),
            n_features=int(data["n_features"]),
            meta=dict(data.get("meta", {})),
        )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "TreeEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit(X, y, params: GbdtParams, schema_id: str = "", meta: dict | None = None) -> TreeEnsemble:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("X must be a 2-D matrix")
    if len(X) != len(y):
        raise DataError("X and y length mismatch")
    if len(X) < 2:
        raise DataError("need at least 2 training rows")
    if np.isnan(X).any() or np.isnan(y).any():
        raise DataError("NaN in training data")

    n_features = X.shape[1]
    all_features = np.arange(n_features)
    base_score = float(y.mean())
    pred = np.full(len(y), base_score, dtype=np.float64)
    trees = []
    for t in range(params.num_trees):
        if params.feature_fraction < 1.0:
            count = max(1, int(round(params.feature_fraction * n_features)))
            gen = substream(params.seed, "gbdt-feature-subset", t)
            features = np.sort(gen.choice(n_features, size=count, replace=False))
        else:
            features = all_features
        residuals = y - pred
        tree = _grow_tree(X, residuals, features, params)
        if tree is None:
            break
        pred += params.learning_rate * tree.leaf_values(X)
        trees.append(tree)
    return TreeEnsemble(
        base_score=base_score,
        trees=trees,
        params=params,
        schema_id=schema_id,
        n_features=n_features,
        meta=dict(meta or {}),
    )
