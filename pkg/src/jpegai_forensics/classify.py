"""Random forest of CART trees (Gini impurity, bootstrap sampling).

Splits send ``x <= threshold`` to the left child.  At equal impurity the
lowest feature index wins, then the lowest threshold.  Columns that are
constant over the whole training set are dropped before any randomness is
drawn, so appending such a column never changes a trained forest.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

FORMAT_NAME = "jpegai-forensics-forest"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A model file is corrupt, truncated, or of an unsupported version."""


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    max_depth: Optional[int] = None
    features_per_split: Union[str, int] = "sqrt"  # "sqrt", "all" or a fixed count
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        fps = self.features_per_split
        if not (fps in ("sqrt", "all") or (isinstance(fps, int) and not isinstance(fps, bool) and fps >= 1)):
            raise ValueError(f"features_per_split must be 'sqrt', 'all' or a positive int, got {fps!r}")

    def split_size(self, d: int) -> int:
        if self.features_per_split == "sqrt":
            k = int(np.sqrt(d))
        elif self.features_per_split == "all":
            k = d
        else:
            k = int(self.features_per_split)
        return max(1, min(d, k))


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # n_nodes x n_classes leaf distributions

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            idx = np.flatnonzero(feat >= 0)
            if idx.size == 0:
                return node
            cur = node[idx]
            go_left = X[idx, feat[idx]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            np.asarray(data["feature"], dtype=np.int64),
            np.asarray(data["threshold"], dtype=np.float64),
            np.asarray(data["left"], dtype=np.int64),
            np.asarray(data["right"], dtype=np.int64),
            np.asarray(data["value"], dtype=np.float64),
        )


@dataclass
class ForestModel:
    trees: list
    config: ForestConfig
    feature_dim: int
    classes: list = field(default_factory=list)

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        total = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            total += tree.value[tree.apply(X)]
        return total / len(self.trees)

    def predict(self, X):
        """Majority vote of the trees (ties go to the first class); also returns probabilities."""
        X = self._check(X)
        votes = np.zeros((X.shape[0], len(self.classes)), dtype=np.int64)
        total = np.zeros((X.shape[0], len(self.classes)))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            dist = tree.value[tree.apply(X)]
            total += dist
            np.add.at(votes, (rows, np.argmax(dist, axis=1)), 1)
        labels = [self.classes[i] for i in np.argmax(votes, axis=1)]
        return labels, total / len(self.trees)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_dim:
            raise ValueError(f"expected n x {self.feature_dim} features, got shape {X.shape}")
        return X

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "config": asdict(self.config),
            "feature_dim": self.feature_dim,
            "classes": list(self.classes),
            "trees": [t.to_dict() for t in self.trees],
        }


def _best_split(Xn: np.ndarray, yn: np.ndarray, n_classes: int, min_leaf: int):
    """Best (column, threshold, impurity) over the columns of ``Xn``; None if no valid split."""
    n, k = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    onehot = np.eye(n_classes)[yn[order]]  # n x k x C
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    right = total[None] - left
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    impurity = (nl - np.sum(left**2, axis=2) / nl) + (nr - np.sum(right**2, axis=2) / nr)
    valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    impurity = np.where(valid, impurity, np.inf)
    # column-major flattening: lowest column first, then lowest position
    flat = int(np.argmin(impurity.T))
    col, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not (lo <= thr < hi):
        thr = lo
    return col, float(thr), float(impurity[pos, col])


def _grow_tree(X, y, n_classes, config: ForestConfig, rng) -> Tree:
    n, d = X.shape
    k = config.split_size(d)
    sample = rng.integers(0, n, size=n)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    stack = [(new_node(sample), sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        if (
            idx.size < 2 * config.min_leaf
            or np.all(yn == yn[0])
            or (config.max_depth is not None and depth >= config.max_depth)
        ):
            continue
        cols = np.sort(rng.choice(d, size=k, replace=False))
        best = _best_split(X[np.ix_(idx, cols)], yn, n_classes, config.min_leaf)
        if best is None and k < d:
            cols = np.setdiff1d(np.arange(d), cols)
            best = _best_split(X[np.ix_(idx, cols)], yn, n_classes, config.min_leaf)
        if best is None:
            continue
        col, thr, _ = best
        f = int(cols[col])
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        lnode, rnode = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, lnode, rnode
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


def rf_train(X, y, config: ForestConfig = ForestConfig()) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be n x d, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    labels = list(y)
    if len(labels) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {len(labels)} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    classes = sorted(set(labels), key=lambda v: (str(type(v)), v))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    yi = np.array([index[v] for v in labels], dtype=np.int64)

    active = np.flatnonzero(X.max(axis=0) > X.min(axis=0))
    Xa = X[:, active]
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if active.size == 0:
            # nothing to split on: every tree is the bootstrap class prior
            sample = rng.integers(0, len(yi), size=len(yi))
            counts = np.bincount(yi[sample], minlength=len(classes)).astype(np.float64)
            tree = Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                        (counts / counts.sum())[None])
        else:
            tree = _grow_tree(Xa, yi, len(classes), config, rng)
            inner = tree.feature >= 0
            tree.feature[inner] = active[tree.feature[inner]]
        trees.append(tree)
    return ForestModel(trees, config, X.shape[1], [_plain(c) for c in classes])


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def rf_predict(model: ForestModel, X):
    """``(labels, probabilities)``."""
    return model.predict(X)


def model_dumps(model: ForestModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def model_save(model: ForestModel, path) -> Path:
    path = Path(path)
    path.write_text(model_dumps(model))
    return path


def model_loads(text: str) -> ForestModel:
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a forest model file")
    if data.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r} (expected {FORMAT_VERSION})")
    try:
        config = ForestConfig(**data["config"])
        trees = [Tree.from_dict(t) for t in data["trees"]]
        model = ForestModel(trees, config, int(data["feature_dim"]), list(data["classes"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from exc
    for t in trees:
        n_nodes = t.feature.size
        if not (t.threshold.size == t.left.size == t.right.size == n_nodes and t.value.shape == (n_nodes, len(model.classes))):
            raise ModelFormatError("inconsistent tree arrays")
        if np.any(t.feature >= model.feature_dim) or not np.allclose(t.value.sum(axis=1), 1.0, atol=1e-9):
            raise ModelFormatError("tree fails model invariants")
    return model


def model_load(path) -> ForestModel:
    return model_loads(Path(path).read_text())
