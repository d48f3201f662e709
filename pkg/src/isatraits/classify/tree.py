"""CART decision trees (Gini impurity) and bootstrap random forests.

Trees grow without a depth limit and split nodes of >= 2 samples. Among
equal-gain splits the lowest feature index wins, then the lowest
threshold; zero-gain nodes become leaves. Thresholds are midpoints
between adjacent distinct sorted values; x[feature] <= threshold goes
left. Forest trees see a bootstrap sample and draw sqrt(d) candidate
features per split from a per-tree seeded generator.
"""

from __future__ import annotations

from typing import Any

import numpy as np


def _gini(counts: np.ndarray, total: int) -> float:
    p = counts / total
    return float(1.0 - np.dot(p, p))


def _majority(counts: np.ndarray) -> dict[str, Any]:
    return {"leaf": True, "klass": int(np.argmax(counts))}


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    counts: np.ndarray,
    feature_indices: np.ndarray,
) -> tuple[float, int, float] | None:
    n, n_classes = X.shape[0], counts.shape[0]
    parent = _gini(counts, n)

    onehot = np.zeros((n, n_classes), dtype=np.float64)
    best: tuple[float, int, float] | None = None
    for f in feature_indices:
        column = X[:, f]
        order = np.argsort(column, kind="stable")
        sorted_values = column[order]
        cuts = np.nonzero(sorted_values[1:] > sorted_values[:-1])[0]
        if cuts.size == 0:
            continue
        onehot[:] = 0.0
        onehot[np.arange(n), y[order]] = 1.0
        prefix = onehot.cumsum(axis=0)

        left_counts = prefix[cuts]
        left_n = (cuts + 1).astype(np.float64)
        right_counts = counts - left_counts
        right_n = n - left_n
        gini_left = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
        gains = parent - (left_n * gini_left + right_n * gini_right) / n

        j = int(np.argmax(gains))  # first max = lowest threshold
        if best is None or gains[j] > best[0]:
            threshold = float((sorted_values[cuts[j]] + sorted_values[cuts[j] + 1]) / 2.0)
            best = (float(gains[j]), int(f), threshold)
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: np.random.Generator | None,
    subset_size: int | None,
) -> dict[str, Any]:
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    if X.shape[0] < 2 or counts.max() == X.shape[0]:
        return _majority(counts)

    if subset_size is not None and rng is not None:
        feature_indices = np.sort(rng.choice(X.shape[1], size=subset_size, replace=False))
    else:
        feature_indices = np.arange(X.shape[1])

    best = _best_split(X, y, counts, feature_indices)
    if best is None or best[0] <= 0.0:
        return _majority(counts)
    _, feature, threshold = best
    go_left = X[:, feature] <= threshold
    return {
        "leaf": False,
        "feature": feature,
        "threshold": threshold,
        "left": _grow(X[go_left], y[go_left], n_classes, rng, subset_size),
        "right": _grow(X[~go_left], y[~go_left], n_classes, rng, subset_size),
    }


def train_tree(X: np.ndarray, y: np.ndarray, n_classes: int) -> dict[str, Any]:
    return {"tree": _grow(X, y, n_classes, rng=None, subset_size=None)}


def _walk(node: dict[str, Any], row: np.ndarray) -> int:
    while not node["leaf"]:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return node["klass"]


def predict_tree_indices(params: dict[str, Any], Q: np.ndarray) -> np.ndarray:
    root = params["tree"]
    return np.array([_walk(root, row) for row in Q], dtype=np.int64)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_trees: int,
    seed: int,
) -> dict[str, Any]:
    n, d = X.shape
    subset_size = max(1, int(np.sqrt(d)))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        bootstrap = rng.integers(0, n, size=n)
        trees.append(_grow(X[bootstrap], y[bootstrap], n_classes, rng, subset_size))
    return {"trees": trees}


def predict_forest_indices(params: dict[str, Any], Q: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((Q.shape[0], n_classes), dtype=np.int64)
    for root in params["trees"]:
        for i, row in enumerate(Q):
            votes[i, _walk(root, row)] += 1
    return np.argmax(votes, axis=1)  # ties resolve to the lowest class index
