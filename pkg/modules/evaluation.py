import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .ensemble import predict_proba
from .errors import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Scores of one model on one named evaluation set.

    per_class_accuracy, roc and auc hold None for classes the set cannot score
    (no true rows, or no positives/negatives for ROC).
    """

    eval_set_name: str
    class_names: tuple
    overall_accuracy: float
    per_class_accuracy: tuple
    confusion: np.ndarray
    roc: tuple
    auc: tuple

    @property
    def n_samples(self):
        return int(self.confusion.sum())

    def per_class_frame(self):
        return pd.DataFrame({
            "class": list(self.class_names),
            "support": self.confusion.sum(axis=1),
            "accuracy": list(self.per_class_accuracy),
            "auc": list(self.auc),
        })

    def to_dict(self):
        return {
            "eval_set_name": self.eval_set_name,
            "class_names": list(self.class_names),
            "overall_accuracy": self.overall_accuracy,
            "per_class_accuracy": list(self.per_class_accuracy),
            "confusion": self.confusion.tolist(),
            "roc": [None if points is None else points.tolist() for points in self.roc],
            "auc": list(self.auc),
        }


def confusion_matrix(labels, predicted, n_classes):
    """Rows are true classes, columns predicted classes"""
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (np.asarray(labels), np.asarray(predicted)), 1)
    return confusion


def roc_auc(scores, labels, c):
    """One-vs-rest ROC points and trapezoid AUC for class c.

    Equal scores form a single threshold step. Returns (None, None) when the
    class has no positives or no negatives.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    class_scores = scores[:, c] if scores.ndim == 2 else scores
    positive = labels == c
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None, None

    order = np.argsort(-class_scores, kind="stable")
    sorted_scores = class_scores[order]
    tp = np.cumsum(positive[order])
    fp = np.cumsum(~positive[order])
    # last index of each run of equal scores
    ends = np.append(np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]), positive.size - 1)

    fpr = np.concatenate([[0.0], fp[ends] / n_neg])
    tpr = np.concatenate([[0.0], tp[ends] / n_pos])
    points = np.column_stack([fpr, tpr])
    return points, float(np.trapezoid(tpr, fpr))


def evaluate(model, ds, name):
    """Accuracy, per-class recall, confusion matrix and per-class ROC of model on ds"""
    if ds.n_samples == 0:
        raise DataError(f"evaluation set '{name}' is empty")
    if model.n_classes != ds.n_classes:
        raise DataError(
            f"model predicts {model.n_classes} classes, '{name}' has {ds.n_classes}"
        )
    scores = predict_proba(model, ds.features)
    predicted = np.argmax(scores, axis=1)
    confusion = confusion_matrix(ds.labels, predicted, ds.n_classes)

    support = confusion.sum(axis=1)
    per_class = tuple(
        float(confusion[c, c] / support[c]) if support[c] else None for c in range(ds.n_classes)
    )
    roc, auc = [], []
    for c in range(ds.n_classes):
        points, area = roc_auc(scores, ds.labels, c)
        if points is None:
            logger.warning("ROC for class %s on '%s' is undefined", ds.class_names[c], name)
        roc.append(points)
        auc.append(area)

    confusion.setflags(write=False)
    return EvalReport(
        eval_set_name=name,
        class_names=ds.class_names,
        overall_accuracy=float(np.trace(confusion) / ds.n_samples),
        per_class_accuracy=per_class,
        confusion=confusion,
        roc=tuple(roc),
        auc=tuple(auc),
    )
