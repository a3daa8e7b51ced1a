import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

# Impurities closer than this are ties; ties keep the lower feature, then the lower threshold
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Binary CART tree stored as flat node arrays.

    Leaves have feature == -1 and children == -1; value holds one class
    distribution per node (leaves route predictions, inner rows are kept for
    inspection).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    max_depth: int = None

    def __post_init__(self):
        arrays = {
            "feature": np.array(self.feature, dtype=np.int64),
            "threshold": np.array(self.threshold, dtype=np.float64),
            "left": np.array(self.left, dtype=np.int64),
            "right": np.array(self.right, dtype=np.int64),
            "value": np.array(self.value, dtype=np.float64),
        }
        n_nodes = arrays["feature"].shape[0]
        if n_nodes == 0 or arrays["value"].ndim != 2 or arrays["value"].shape[0] != n_nodes:
            raise DataError("tree needs at least one node and one distribution per node")
        for name, array in arrays.items():
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n_classes(self):
        return self.value.shape[1]

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())


def gini_impurity(counts):
    """1 - sum of squared class proportions"""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini impurity needs a positive total count")
    proportions = counts / total
    return float(1.0 - np.sum(proportions ** 2))


def _best_split(X, weighted_onehot, candidates):
    """(feature, threshold) minimising weighted child Gini over candidates, or None"""
    total = weighted_onehot.sum(axis=0)
    total_weight = total.sum()
    best = None
    for f in candidates:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cuts = np.flatnonzero(xs[1:] > xs[:-1])
        if cuts.size == 0:
            continue
        left = np.cumsum(weighted_onehot[order], axis=0)[cuts]
        right = total - left
        w_left = left.sum(axis=1)
        w_right = right.sum(axis=1)
        impurity = (
            w_left - (left ** 2).sum(axis=1) / w_left
            + w_right - (right ** 2).sum(axis=1) / w_right
        ) / total_weight
        i = int(np.flatnonzero(impurity <= impurity.min() + TIE_TOLERANCE)[0])
        if best is None or impurity[i] < best[0] - TIE_TOLERANCE:
            lo, hi = xs[cuts[i]], xs[cuts[i] + 1]
            threshold = 0.5 * (lo + hi)
            if threshold >= hi:
                threshold = lo
            best = (impurity[i], int(f), float(threshold))
    return None if best is None else best[1:]


def _node_split(X, weighted_onehot, feature_subset, seed, node):
    n_features = X.shape[1]
    if feature_subset is None or feature_subset >= n_features:
        return _best_split(X, weighted_onehot, range(n_features))

    perm = np.random.default_rng([seed, node]).permutation(n_features)
    split = _best_split(X, weighted_onehot, sorted(perm[:feature_subset]))
    # Keep drawing features until one can split, as the reference forests do
    for f in perm[feature_subset:]:
        if split is not None:
            break
        split = _best_split(X, weighted_onehot, [f])
    return split


def grow_tree(X, y, n_classes, weights=None, max_depth=None, feature_subset=None, seed=0):
    """Grow a weighted-Gini tree on raw arrays; zero-weight rows are ignored.

    Nodes are numbered in depth-first pre-order (left subtree first), which
    also numbers the node-local feature-sampling seeds.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("cannot fit a tree on an empty dataset")
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape[0] != X.shape[0]:
        raise DataError(f"{w.shape[0]} weights for {X.shape[0]} rows")
    if not np.all(np.isfinite(w)):
        raise DataError("sample weights must be finite")
    if np.any(w < 0) or w.sum() <= 0:
        raise DataError("sample weights must be non-negative with a positive sum")
    if feature_subset is not None:
        feature_subset = max(int(feature_subset), 1)

    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    weighted_onehot = np.zeros((X.shape[0], n_classes))
    weighted_onehot[np.arange(X.shape[0]), y] = w

    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(np.arange(X.shape[0]), 0, -1, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node

        counts = weighted_onehot[rows].sum(axis=0)
        value.append(counts / counts.sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)

        if (max_depth is not None and depth >= max_depth) or np.count_nonzero(counts) <= 1:
            continue
        split = _node_split(X[rows], weighted_onehot[rows], feature_subset, seed, node)
        if split is None:
            continue

        f, cut = split
        goes_left = X[rows, f] <= cut
        feature[node] = f
        threshold[node] = cut
        stack.append((rows[~goes_left], depth + 1, node, False))
        stack.append((rows[goes_left], depth + 1, node, True))

    return TreeModel(feature, threshold, left, right, value, X.shape[1], max_depth)


def fit_tree(ds, weights=None, max_depth=None, feature_subset=None, seed=0):
    """Fit a CART classifier on a FeatureDataset (uniform weights when weights is None)"""
    if ds.n_samples == 0:
        raise DataError("cannot fit a tree on an empty dataset")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if not np.all(np.isfinite(weights)):
            raise DataError("sample weights must be finite")
        if np.any(weights <= 0):
            raise DataError("sample weights must be positive")
    model = grow_tree(ds.features, ds.labels, ds.n_classes, weights, max_depth, feature_subset, seed)
    logger.debug("Fitted tree: %s nodes, depth %s", model.n_nodes, model.depth)
    return model


def check_dimension(X, n_features):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = X.reshape(1, -1) if single else X
    if X2.ndim != 2 or X2.shape[1] != n_features:
        raise DataError(f"expected {n_features} features, got shape {X.shape}")
    return X2, single


def apply_tree(model, X):
    """Leaf index reached by each row of X (x[f] <= threshold goes left)"""
    nodes = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(model.feature[nodes] >= 0)
    while active.size:
        current = nodes[active]
        goes_left = X[active, model.feature[current]] <= model.threshold[current]
        nodes[active] = np.where(goes_left, model.left[current], model.right[current])
        active = active[model.feature[nodes[active]] >= 0]
    return nodes


def predict_tree(model, x):
    """Leaf class distribution for one vector (or one row per vector for a matrix)"""
    X, single = check_dimension(x, model.n_features)
    proba = model.value[apply_tree(model, X)]
    return proba[0] if single else proba
