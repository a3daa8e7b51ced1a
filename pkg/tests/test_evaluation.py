import numpy as np
import pytest

from conftest import make_blobs
from modules.data import FeatureDataset
from modules.ensemble import fit_forest
from modules.errors import DataError
from modules.evaluation import confusion_matrix, evaluate, roc_auc
from modules.tree import TreeModel, fit_tree


def pair_counting_auc(scores, positive):
    pos, neg = scores[positive], scores[~positive]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.size * neg.size)


def binary_auc(pos, neg):
    scores = np.array(pos + neg)
    labels = np.array([1] * len(pos) + [0] * len(neg))
    return roc_auc(scores, labels, 1)[1]


class TestAuc:

    def test_perfect_separation(self):
        assert binary_auc([0.9, 0.8], [0.4, 0.3]) == pytest.approx(1.0)

    def test_all_scores_equal(self):
        assert binary_auc([0.5, 0.5], [0.5, 0.5, 0.5]) == pytest.approx(0.5)

    def test_worked_example(self):
        assert binary_auc([0.8, 0.4], [0.6, 0.2]) == pytest.approx(0.75)

    def test_curve_endpoints(self):
        points, _ = roc_auc(np.array([0.9, 0.1, 0.5]), np.array([1, 0, 1]), 1)
        assert points[0].tolist() == [0.0, 0.0]
        assert points[-1].tolist() == [1.0, 1.0]

    def test_degenerate_class_is_missing(self):
        assert roc_auc(np.array([0.2, 0.3]), np.array([0, 0]), 1) == (None, None)

    def test_matches_pair_counting(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            scores = rng.integers(0, 6, size=n) / 5.0
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            auc = roc_auc(scores, labels, 1)[1]
            assert auc == pytest.approx(pair_counting_auc(scores, labels == 1), abs=1e-9)

    def test_increasing_transform_keeps_curve(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            scores = rng.integers(0, 6, size=40) / 5.0
            labels = rng.integers(0, 2, size=40)
            labels[:2] = (0, 1)
            points, auc = roc_auc(scores, labels, 1)
            moved_points, moved_auc = roc_auc(np.exp(5.0 * scores), labels, 1)
            assert np.array_equal(points, moved_points)
            assert moved_auc == auc


class TestEvaluate:

    def test_confusion_rows_are_true_classes(self):
        confusion = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 1], 3)
        assert confusion.tolist() == [[1, 1, 0], [0, 1, 0], [0, 1, 0]]

    def test_perfect_predictor(self, blobs):
        report = evaluate(fit_tree(blobs), blobs, "train")
        assert report.overall_accuracy == 1.0
        assert report.per_class_accuracy == (1.0, 1.0, 1.0)
        assert np.array_equal(report.confusion, np.diag(blobs.class_counts()))

    def test_constant_predictor(self):
        ds = FeatureDataset(np.zeros((10, 1)), [0] * 8 + [1] * 2, ("a", "b"))
        model = TreeModel([-1], [0.0], [-1], [-1], [[1.0, 0.0]], 1)
        report = evaluate(model, ds, "const")
        assert report.overall_accuracy == pytest.approx(0.8)
        assert report.per_class_accuracy == (1.0, 0.0)
        assert report.auc == (0.5, 0.5)

    def test_class_without_rows_is_missing(self):
        ds = FeatureDataset([[0.0], [1.0]], [0, 0], ("a", "b"))
        model = TreeModel([-1], [0.0], [-1], [-1], [[1.0, 0.0]], 1)
        report = evaluate(model, ds, "one-class")
        assert report.per_class_accuracy == (1.0, None)
        assert report.auc == (None, None)
        assert report.to_dict()["per_class_accuracy"] == [1.0, None]

    def test_class_count_mismatch(self, blobs):
        model = TreeModel([-1], [0.0], [-1], [-1], [[1.0, 0.0]], 2)
        with pytest.raises(DataError, match="classes"):
            evaluate(model, blobs, "val")

    def test_per_class_frame(self):
        train = make_blobs([40, 40], seed=1)
        report = evaluate(fit_forest(train, n_estimators=5), make_blobs([20, 10], seed=2), "test")
        frame = report.per_class_frame()
        assert frame["support"].tolist() == [20, 10]
        assert list(frame.columns) == ["class", "support", "accuracy", "auc"]
        assert report.n_samples == 30

    def test_overall_is_support_weighted_mean(self):
        train = make_blobs([50, 30, 10], seed=5, separation=2.0)
        ds = make_blobs([40, 25, 5], seed=6, separation=2.0)
        report = evaluate(fit_tree(train, max_depth=2), ds, "val")
        support = ds.class_counts()
        weighted = sum(n * acc for n, acc in zip(support, report.per_class_accuracy)) / support.sum()
        assert report.overall_accuracy == pytest.approx(weighted, abs=1e-12)
