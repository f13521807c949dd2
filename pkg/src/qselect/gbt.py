"""Gradient-boosted regression trees, implemented from scratch.

Squared-error boosting: start from the target mean, then repeatedly fit a
depth-limited regression tree to the current residuals on a random
subsample and add it with shrinkage. Trees split greedily on the
axis-aligned threshold that maximizes the reduction in sum of squared
errors. Everything is deterministic given the seed and the input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class RegressorHyper:
    """Boosting hyperparameters."""

    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.05
    subsample: float = 0.8
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 0:
            raise ValidationError("n_trees must be nonnegative")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be at least 1")
        if not 0 < self.learning_rate <= 1:
            raise ValidationError("learning_rate must be in (0, 1]")
        if not 0 < self.subsample <= 1:
            raise ValidationError("subsample must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be at least 1")


class RegressionTree:
    """One fitted tree, stored as flat arrays for vectorized prediction."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(
        self,
        feature: np.ndarray,
        threshold: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
        value: np.ndarray,
    ) -> None:
        self.feature = feature  # -1 marks a leaf
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            sub_nodes = node[idx]
            x = X[idx, feat[idx]]
            go_left = x <= self.threshold[sub_nodes]
            node[idx] = np.where(go_left, self.left[sub_nodes], self.right[sub_nodes])
        return self.value[node]


def _best_split(
    X: np.ndarray, y: np.ndarray, min_leaf: int
) -> tuple[int, float, np.ndarray] | None:
    """Find the (feature, threshold) split maximizing SSE reduction.

    Routing rule is x <= threshold goes left, with the threshold placed on
    the last left-hand value so training and prediction partition points
    identically. Returns None when no split clears the minimum gain.
    """
    n = y.size
    total_sum = y.sum()
    total_sq = float(y @ y)
    total_sse = total_sq - total_sum * total_sum / n

    best_gain = _MIN_GAIN
    best: tuple[int, float, np.ndarray] | None = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xo = X[order, j]
        yo = y[order]
        csum = np.cumsum(yo)
        csq = np.cumsum(yo * yo)
        # Split after position i: left = order[:i+1], right = order[i+1:].
        left_n = np.arange(1, n)
        valid = (xo[:-1] < xo[1:]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        left_sse = csq[:-1] - csum[:-1] ** 2 / left_n
        right_sum = total_sum - csum[:-1]
        right_sse = (total_sq - csq[:-1]) - right_sum**2 / (n - left_n)
        gain = np.where(valid, total_sse - left_sse - right_sse, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            best = (j, float(xo[i]), order[: i + 1])
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int, min_leaf: int) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        y_node = y[idx]
        value[node] = float(y_node.mean())
        if depth >= max_depth or idx.size < 2 * min_leaf or np.ptp(y_node) == 0.0:
            return node
        split = _best_split(X[idx], y_node, min_leaf)
        if split is None:
            return node
        j, thr, left_local = split
        mask = np.zeros(idx.size, dtype=bool)
        mask[left_local] = True
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return RegressionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value),
    )


class GradientBoostedRegressor:
    """Additive ensemble of shrunken regression trees."""

    def __init__(self, base: float, trees: list[RegressionTree], learning_rate: float) -> None:
        self.base = base
        self.trees = trees
        self.learning_rate = learning_rate

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.full(X.shape[0], self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gradient_boosted(
    X: np.ndarray, y: np.ndarray, hyper: RegressorHyper | None = None
) -> GradientBoostedRegressor:
    """Fit the boosted ensemble. Constant targets yield a zero-tree model."""
    hyper = hyper or RegressorHyper()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValidationError(f"bad training shapes X={X.shape}, y={y.shape}")
    if y.size == 0:
        raise ValidationError("no training rows")

    if np.ptp(y) == 0.0:
        return GradientBoostedRegressor(float(y[0]), [], hyper.learning_rate)
    base = float(y.mean())
    model = GradientBoostedRegressor(base, [], hyper.learning_rate)

    rng = np.random.default_rng(hyper.seed)
    n = y.size
    sample_size = max(1, int(round(hyper.subsample * n)))
    pred = np.full(n, base)
    for _ in range(hyper.n_trees):
        if sample_size < n:
            idx = rng.choice(n, size=sample_size, replace=False)
            idx.sort()
        else:
            idx = np.arange(n)
        residual = y[idx] - pred[idx]
        tree = _grow_tree(X[idx], residual, hyper.max_depth, hyper.min_samples_leaf)
        pred += hyper.learning_rate * tree.predict(X)
        model.trees.append(tree)
    return model
