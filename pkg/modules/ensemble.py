import logging
import math
from dataclasses import dataclass
from functools import singledispatch

import numpy as np
from joblib import Parallel, delayed

from .errors import DataError, TrainingError
from .tree import TreeModel, apply_tree, check_dimension, grow_tree

logger = logging.getLogger(__name__)

ALPHA_CAP = math.log(1e10)

ADABOOST_ESTIMATOR_GRID = (5, 10, 20, 30, 40, 50, 70, 100, 200)
ADABOOST_LEARNING_RATE_GRID = (1e-3, 1e-2, 5e-2, 0.1, 0.2, 0.5, 0.7, 1.0)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    inbag: np.ndarray  # n_estimators x N, True where the row was drawn for that tree
    max_samples: float
    n_estimators: int
    seed: int
    max_depth: int = None

    @property
    def n_features(self):
        return self.trees[0].n_features

    @property
    def n_classes(self):
        return self.trees[0].n_classes


@dataclass(frozen=True, eq=False)
class BoostModel:
    stages: tuple  # (TreeModel, alpha) pairs
    learning_rate: float
    n_classes: int
    n_estimators: int
    max_depth: int = None
    seed: int = 0

    @property
    def n_features(self):
        return self.stages[0][0].n_features

    @property
    def alphas(self):
        return np.array([alpha for _, alpha in self.stages])


@dataclass(frozen=True, eq=False)
class VotingModel:
    members: tuple
    weights: tuple

    @property
    def n_features(self):
        return self.members[0].n_features

    @property
    def n_classes(self):
        return self.members[0].n_classes


@dataclass(frozen=True)
class OobScore:
    """accuracy is None when no row was left out of any bag"""

    accuracy: float
    n_scored: int
    n_skipped: int
    mean_oob_fraction: float


def bootstrap_size(max_samples, n_rows):
    return max(int(math.floor(max_samples * n_rows + 0.5)), 1)


def _fit_bagged_tree(X, y, n_classes, max_samples, max_depth, feature_subset, seed):
    rng = np.random.default_rng(seed)
    drawn = rng.integers(0, X.shape[0], size=bootstrap_size(max_samples, X.shape[0]))
    counts = np.bincount(drawn, minlength=X.shape[0])
    tree = grow_tree(X, y, n_classes, counts, max_depth, feature_subset, seed)
    return tree, counts > 0


def fit_forest(ds, n_estimators=200, max_samples=0.75, max_depth=None, seed=0, n_jobs=1):
    """Bagged Gini trees with sqrt(D) features per node.

    Tree i draws its bootstrap and its node seeds from seed + i, so the forest
    is the same whether trees are fitted serially or with n_jobs workers.
    """
    if n_estimators < 1:
        raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
    if not 0.0 < max_samples <= 1.0:
        raise ValueError(f"max_samples must lie in (0, 1], got {max_samples}")
    if ds.n_samples == 0:
        raise DataError("cannot fit a forest on an empty dataset")

    feature_subset = max(int(math.isqrt(ds.n_features)), 1)
    fitted = Parallel(n_jobs=n_jobs)(
        delayed(_fit_bagged_tree)(
            ds.features, ds.labels, ds.n_classes, max_samples, max_depth, feature_subset, seed + i
        )
        for i in range(n_estimators)
    )
    trees = tuple(tree for tree, _ in fitted)
    inbag = np.vstack([mask for _, mask in fitted])
    inbag.setflags(write=False)
    logger.info(
        "Fitted forest: %s trees, max_samples=%s, max_depth=%s", n_estimators, max_samples, max_depth
    )
    return ForestModel(trees, inbag, max_samples, n_estimators, seed, max_depth)


def oob_accuracy(model, ds):
    """Accuracy of each row under the trees that never saw it.

    Rows drawn into every bag are skipped and counted in n_skipped.
    """
    if model.inbag.shape[1] != ds.n_samples:
        raise DataError(
            f"forest was trained on {model.inbag.shape[1]} rows, dataset has {ds.n_samples}"
        )
    X, _ = check_dimension(ds.features, model.n_features)
    votes = np.zeros((ds.n_samples, model.n_classes))
    for tree, inbag in zip(model.trees, model.inbag):
        out = np.flatnonzero(~inbag)
        if out.size:
            votes[out] += tree.value[apply_tree(tree, X[out])]

    covered = (~model.inbag).any(axis=0)
    n_scored = int(covered.sum())
    n_skipped = ds.n_samples - n_scored
    if n_skipped:
        logger.warning("OOB: %s of %s rows are in every bag and were skipped", n_skipped, ds.n_samples)
    accuracy = None
    if n_scored:
        predicted = np.argmax(votes[covered], axis=1)
        accuracy = float(np.mean(predicted == ds.labels[covered]))
    return OobScore(accuracy, n_scored, n_skipped, float(1.0 - model.inbag.mean()))


def samme_alpha(error, n_classes, learning_rate=1.0):
    """Stage weight lr * (ln((1 - err) / err) + ln(K - 1)) for 0 < err < 1 - 1/K"""
    if not 0.0 < error < 1.0 - 1.0 / n_classes:
        raise ValueError(f"SAMME stage error must lie in (0, {1.0 - 1.0 / n_classes:.4g}), got {error}")
    return learning_rate * (math.log((1.0 - error) / error) + math.log(n_classes - 1))


def samme_reweight(weights, missed, alpha):
    """Scale missed rows by exp(alpha) and renormalise to sum 1"""
    weights = np.where(missed, weights * math.exp(alpha), weights)
    return weights / weights.sum()


def fit_adaboost(ds, n_estimators=50, learning_rate=1.0, max_depth=1, seed=0):
    """Multiclass AdaBoost with the SAMME stage weight.

    A stage whose weighted error reaches 1 - 1/K is discarded and boosting
    stops; a perfect stage gets alpha = ln(1e10) and ends boosting.
    """
    if n_estimators < 1:
        raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    if ds.n_samples == 0:
        raise DataError("cannot fit AdaBoost on an empty dataset")
    n_classes = ds.n_classes
    if n_classes < 2:
        raise DataError("AdaBoost needs at least two classes")

    weights = np.full(ds.n_samples, 1.0 / ds.n_samples)
    stages = []
    for m in range(n_estimators):
        tree = grow_tree(ds.features, ds.labels, n_classes, weights, max_depth, None, seed + m)
        predicted = np.argmax(tree.value[apply_tree(tree, ds.features)], axis=1)
        missed = predicted != ds.labels
        error = float(weights[missed].sum() / weights.sum())

        if error >= 1.0 - 1.0 / n_classes:
            logger.warning("AdaBoost stage %s error %.4f is no better than chance; stopping", m, error)
            break
        if error <= 0.0:
            stages.append((tree, ALPHA_CAP))
            logger.info("AdaBoost stage %s fits the data exactly; stopping", m)
            break

        alpha = samme_alpha(error, n_classes, learning_rate)
        stages.append((tree, alpha))
        weights = samme_reweight(weights, missed, alpha)

    if not stages:
        raise TrainingError("AdaBoost produced no stage better than chance")
    logger.info("Fitted AdaBoost: %s stages, learning_rate=%s, max_depth=%s",
                len(stages), learning_rate, max_depth)
    return BoostModel(tuple(stages), learning_rate, n_classes, n_estimators, max_depth, seed)


def fit_voting(members, weights=None):
    """Soft-voting wrapper over already trained models"""
    members = tuple(members)
    if len(members) < 2:
        raise DataError("a voting model needs at least two members")
    n_features, n_classes = members[0].n_features, members[0].n_classes
    for member in members[1:]:
        if member.n_features != n_features or member.n_classes != n_classes:
            raise DataError("voting members must share feature dimension and class count")

    weights = (1.0,) * len(members) if weights is None else tuple(float(w) for w in weights)
    if len(weights) != len(members):
        raise DataError(f"{len(weights)} weights for {len(members)} members")
    if any(w < 0 or not math.isfinite(w) for w in weights) or sum(weights) <= 0:
        raise DataError("voting weights must be non-negative with a positive sum")
    return VotingModel(members, weights)


@singledispatch
def _proba(model, X):
    raise TypeError(f"no probability output for {type(model).__name__}")


@_proba.register
def _(model: TreeModel, X):
    return model.value[apply_tree(model, X)]


@_proba.register
def _(model: ForestModel, X):
    total = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        total += tree.value[apply_tree(tree, X)]
    return total / len(model.trees)


@_proba.register
def _(model: BoostModel, X):
    votes = np.zeros((X.shape[0], model.n_classes))
    rows = np.arange(X.shape[0])
    for tree, alpha in model.stages:
        votes[rows, np.argmax(tree.value[apply_tree(tree, X)], axis=1)] += alpha
    return votes / votes.sum(axis=1, keepdims=True)


@_proba.register
def _(model: VotingModel, X):
    total = np.zeros((X.shape[0], model.n_classes))
    for member, weight in zip(model.members, model.weights):
        if weight:
            total += weight * _proba(member, X)
    return total / sum(model.weights)


def _check_model(model):
    if isinstance(model, ForestModel) and not model.trees:
        raise DataError("forest has no trees")
    if isinstance(model, BoostModel) and not model.stages:
        raise DataError("boosted model has no stages")
    if isinstance(model, VotingModel) and not model.members:
        raise DataError("voting model has no members")


def predict_proba(model, x):
    """Class-probability vector(s) for any trained model family"""
    _check_model(model)
    X, single = check_dimension(x, model.n_features)
    proba = _proba(model, X)
    return proba[0] if single else proba


def staged_proba(model, x):
    """Yield a BoostModel's probabilities after each stage, first stage first"""
    _check_model(model)
    X, single = check_dimension(x, model.n_features)
    votes = np.zeros((X.shape[0], model.n_classes))
    rows = np.arange(X.shape[0])
    for tree, alpha in model.stages:
        votes[rows, np.argmax(tree.value[apply_tree(tree, X)], axis=1)] += alpha
        proba = votes / votes.sum(axis=1, keepdims=True)
        yield proba[0] if single else proba


def predict(model, x):
    """Argmax of predict_proba; ties go to the lowest class index"""
    return np.argmax(predict_proba(model, x), axis=-1)
