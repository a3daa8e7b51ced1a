import json

import numpy as np
import pytest

from modules.data import (
    SOURCE_TEST_COUNTS,
    SOURCE_TRAIN_COUNTS,
    FeatureDataset,
    corpus_dataset,
    save_features,
    scale_counts,
    synth_blobs,
)


def make_blobs(counts, seed=0, n_features=2, separation=6.0, stddev=1.0):
    """Blobs with centers on a ring of radius `separation` (extra dims zero)"""
    spec = []
    for c, count in enumerate(counts):
        angle = 2.0 * np.pi * c / len(counts)
        center = np.zeros(n_features)
        center[0], center[1] = separation * np.cos(angle), separation * np.sin(angle)
        spec.append((center, stddev, count))
    return synth_blobs(spec, seed)


@pytest.fixture
def blobs():
    return make_blobs([60, 60, 60], seed=3)


@pytest.fixture
def xor():
    return FeatureDataset([[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0], ("a", "b"))


@pytest.fixture
def mini_corpus(tmp_path):
    """Vehicle-corpus train/test files at 1/100 scale plus a run config pointing at them"""
    train_counts = scale_counts(SOURCE_TRAIN_COUNTS, 100)
    test_counts = scale_counts(SOURCE_TEST_COUNTS, 100)
    parts = {
        "original": corpus_dataset(train_counts, (1,), 4, seed=5, spread=1.0),
        "extra": corpus_dataset(train_counts, (2, 3), 4, seed=5, spread=1.0),
        "test_original": corpus_dataset(test_counts, (1,), 4, seed=5, spread=1.0, stream=1),
        "test_extra": corpus_dataset(test_counts, (2, 3), 4, seed=5, spread=1.0, stream=1),
    }
    for name, ds in parts.items():
        save_features(ds, tmp_path / f"{name}.csv")
    return tmp_path


def write_config(directory, **overrides):
    document = {
        "train": {"original": "original.csv", "extra": "extra.csv"},
        "test": {"original": "test_original.csv", "extra": "test_extra.csv"},
        "variant": {"kind": "original", "balanced_target": 20},
        "model": {"family": "adaboost", "params": {"n_estimators": 5, "learning_rate": 0.5, "max_depth": 2}},
        "seed": 0,
        "out": "runs",
    }
    document.update(overrides)
    path = directory / "config.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path
