import numpy as np
import pytest

from conftest import make_blobs
from modules.data import (
    SOURCE_TRAIN_COUNTS,
    SYNTHETIC_TAG,
    VEHICLE_CLASSES,
    FeatureDataset,
    class_distribution,
    combined_counts,
)
from modules.errors import DataError
from modules.rebalance import (
    SmoteParams,
    VariantSpec,
    build_variant,
    nearest_neighbors,
    smote,
    undersample,
    variant_manifest,
)


def counted_dataset(counts, n_features=2, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(counts)), counts)
    return FeatureDataset(rng.standard_normal((labels.size, n_features)), labels,
                          tuple(f"c{i}" for i in range(len(counts))))


def empty_like(ds):
    return FeatureDataset(np.empty((0, ds.n_features)), np.empty(0, dtype=np.int64), ds.class_names)


def neighbor_segments(members, k):
    """Every (base, neighbour) pair a SMOTE draw may use, by exhaustive distance scan"""
    k_eff = min(k, len(members) - 1)
    dist = np.linalg.norm(members[:, None, :] - members[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    kth = np.sort(dist, axis=1)[:, k_eff - 1]
    bases, partners = np.nonzero(dist <= kth[:, None] + 1e-12)
    return members[bases], members[partners] - members[bases]


def on_some_segment(point, segments):
    starts, directions = segments
    length2 = np.einsum("ij,ij->i", directions, directions)
    offset = point - starts
    g = np.where(length2 > 0, np.einsum("ij,ij->i", offset, directions) / np.where(length2 > 0, length2, 1), 0.0)
    residual = np.linalg.norm(starts + g[:, None] * directions - point, axis=1)
    return bool(np.any((g >= -1e-9) & (g <= 1 + 1e-9) & (residual < 1e-9)))


class TestSmote:

    def test_identical_points_stay_put(self):
        ds = FeatureDataset(np.ones((3, 2)), [0, 0, 0], ("a",))
        out = smote(ds, SmoteParams((10,), k=5, seed=0))
        assert out.n_samples == 10
        assert np.all(out.features == 1.0)

    def test_two_point_class_interpolates_on_segment(self):
        ds = FeatureDataset([[0.0, 0.0], [2.0, 0.0]], [0, 0], ("a",))
        out = smote(ds, SmoteParams((10,), k=1, seed=3))
        synthetic = out.features[out.source_tags == SYNTHETIC_TAG]
        assert synthetic.shape == (8, 2)
        assert np.all(synthetic[:, 1] == 0.0)
        assert np.all((synthetic[:, 0] >= 0.0) & (synthetic[:, 0] <= 2.0))

    def test_originals_kept_first(self):
        ds = make_blobs([20, 6], seed=1)
        out = smote(ds, SmoteParams((0, 20), seed=1))
        assert np.array_equal(out.features[:ds.n_samples], ds.features)
        assert class_distribution(out).counts == (20, 20)

    def test_random_geometry(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            n_features = int(rng.integers(1, 9))
            counts = rng.integers(2, 60, size=int(rng.integers(1, 4)))
            ds = counted_dataset(counts, n_features, seed=trial)
            targets = tuple(int(c + rng.integers(0, 40)) for c in counts)
            k = int(rng.integers(1, 7))
            out = smote(ds, SmoteParams(targets, k=k, seed=trial))
            assert class_distribution(out).counts == targets
            synthetic = out.source_tags == SYNTHETIC_TAG
            for c in range(ds.n_classes):
                segments = neighbor_segments(ds.features[ds.labels == c], k)
                for point in out.features[synthetic & (out.labels == c)]:
                    assert on_some_segment(point, segments)

    def test_parallel_equals_serial(self):
        ds = make_blobs([40, 7, 9], seed=5)
        params = SmoteParams((0, 40, 40), seed=11)
        serial = smote(ds, params, n_jobs=1)
        parallel = smote(ds, params, n_jobs=2)
        assert np.array_equal(serial.features, parallel.features)

    def test_target_below_count(self):
        with pytest.raises(DataError, match="below"):
            smote(make_blobs([10, 10]), SmoteParams((5, 0)))

    def test_single_row_class(self):
        ds = FeatureDataset([[0.0], [1.0], [2.0]], [0, 0, 1], ("a", "b"))
        with pytest.raises(DataError, match="at least 2"):
            smote(ds, SmoteParams((0, 4)))

    def test_neighbors_exclude_self(self):
        points = np.array([[0.0], [1.0], [3.0], [3.5]])
        assert nearest_neighbors(points, np.arange(4), 1).ravel().tolist() == [1, 0, 3, 2]


class TestUndersample:

    def test_inactive_cap(self):
        ds = make_blobs([10, 3])
        out = undersample(ds, 50, seed=0)
        assert np.array_equal(out.features, ds.features)

    def test_cap_keeps_distinct_input_rows(self):
        ds = make_blobs([10, 3], seed=2)
        out = undersample(ds, 5, seed=0)
        assert class_distribution(out).counts == (5, 3)
        originals = {tuple(row) for row in ds.features}
        kept = [tuple(row) for row in out.features]
        assert len(set(kept)) == len(kept)
        assert set(kept) <= originals

    def test_deterministic(self):
        ds = make_blobs([30, 30], seed=2)
        assert np.array_equal(undersample(ds, 7, seed=4).features, undersample(ds, 7, seed=4).features)


class TestVariants:

    def test_original_is_identity(self):
        ds = make_blobs([10, 4])
        assert build_variant(ds, None, VariantSpec("original")) is ds

    def test_extras_required(self):
        with pytest.raises(DataError, match="extra"):
            build_variant(make_blobs([10, 4]), None, VariantSpec("combined"))

    def test_partial_theta_rule(self):
        ds = counted_dataset([1000, 900, 100, 40])
        out = build_variant(ds, empty_like(ds), VariantSpec("smote_partial", partial_theta=0.25))
        assert class_distribution(out).counts == (1000, 900, 250, 250)

    def test_smote_combined_corpus_counts(self):
        counts = combined_counts(SOURCE_TRAIN_COUNTS)
        ds = counted_dataset([counts[name] for name in VEHICLE_CLASSES], n_features=2, seed=1)
        out = build_variant(ds, empty_like(ds), VariantSpec("smote_combined", seed=0))
        assert set(class_distribution(out).counts) == {7909}

    def test_balanced_corpus_counts(self):
        counts = combined_counts(SOURCE_TRAIN_COUNTS)
        ds = counted_dataset([counts[name] for name in VEHICLE_CLASSES], n_features=2, seed=1)
        out = build_variant(ds, empty_like(ds), VariantSpec("balanced", balanced_target=2000))
        assert class_distribution(out).counts == (2000,) * 16

    def test_smote_uses_original_only(self):
        original = make_blobs([30, 6], seed=1)
        extra = make_blobs([5, 50], seed=2)
        out = build_variant(original, extra, VariantSpec("smote"))
        assert class_distribution(out).counts == (30, 30)

    def test_manifest(self):
        ds = counted_dataset([20, 5])
        spec = VariantSpec("smote_partial", partial_theta=0.5)
        out = build_variant(ds, empty_like(ds), spec)
        manifest = variant_manifest(ds, out, spec)
        assert manifest["kind"] == "smote_partial"
        assert manifest["parameters"]["partial_theta"] == 0.5
        assert manifest["classes"][1] == {"name": "c1", "before": 5, "after": 10}
        assert manifest["synthetic_rows"] == 5

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown variant"):
            VariantSpec("oversample")
