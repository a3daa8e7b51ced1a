import json

import numpy as np
import pytest

from conftest import make_blobs
from modules.ensemble import fit_adaboost, fit_forest, fit_voting, predict_proba
from modules.errors import ModelFileError, ModelVersionError
from modules.persistence import FORMAT_VERSION, load_model, save_model
from modules.tree import fit_tree


@pytest.fixture
def forest(blobs):
    return fit_forest(blobs, n_estimators=8, max_samples=0.75, max_depth=4, seed=2)


@pytest.fixture
def probe():
    return np.random.default_rng(9).normal(scale=6.0, size=(100, 2))


def rewrite(path, edit):
    document = json.loads(path.read_text())
    edit(document)
    path.write_text(json.dumps(document))


class TestRoundTrip:

    def test_forest_predictions_identical(self, tmp_path, forest, probe):
        path = save_model(forest, tmp_path / "forest.json")
        loaded = load_model(path)
        assert np.array_equal(predict_proba(loaded, probe), predict_proba(forest, probe))
        assert np.array_equal(loaded.inbag, forest.inbag)
        assert loaded.max_samples == forest.max_samples

    def test_boost_alphas_exact(self, tmp_path, blobs, probe):
        model = fit_adaboost(blobs, n_estimators=6, learning_rate=0.5, max_depth=2, seed=1)
        loaded = load_model(save_model(model, tmp_path / "boost.json"))
        assert loaded.alphas.tolist() == model.alphas.tolist()
        assert np.array_equal(predict_proba(loaded, probe), predict_proba(model, probe))

    def test_voting_members_survive(self, tmp_path, forest, blobs, probe):
        model = fit_voting([forest, fit_adaboost(blobs, n_estimators=4, max_depth=2)], (2, 1))
        loaded = load_model(save_model(model, tmp_path / "vote.json"))
        assert loaded.weights == (2, 1)
        assert np.array_equal(predict_proba(loaded, probe), predict_proba(model, probe))

    def test_single_tree(self, tmp_path, xor):
        tree = fit_tree(xor, max_depth=2)
        loaded = load_model(save_model(tree, tmp_path / "tree.json"))
        assert np.array_equal(loaded.threshold, tree.threshold)

    def test_provenance(self, tmp_path, forest):
        path = save_model(forest, tmp_path / "m.json", {"variant": "smote", "class_names": ["a", "b", "c"]})
        _, provenance = load_model(path, with_provenance=True)
        assert provenance == {"variant": "smote", "class_names": ["a", "b", "c"]}

    def test_file_is_deterministic(self, tmp_path):
        ds = make_blobs([20, 20], seed=4)
        first = save_model(fit_forest(ds, n_estimators=3, seed=5), tmp_path / "a.json").read_bytes()
        second = save_model(fit_forest(ds, n_estimators=3, seed=5), tmp_path / "b.json").read_bytes()
        assert first == second

    def test_no_temp_files_left(self, tmp_path, forest):
        save_model(forest, tmp_path / "m.json")
        assert [p.name for p in tmp_path.iterdir()] == ["m.json"]


class TestCorruptFiles:

    def test_version_bump(self, tmp_path, forest):
        path = save_model(forest, tmp_path / "m.json")
        rewrite(path, lambda doc: doc.update(format_version=FORMAT_VERSION + 1))
        with pytest.raises(ModelVersionError):
            load_model(path)

    def test_truncated_file(self, tmp_path, forest):
        path = save_model(forest, tmp_path / "m.json")
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ModelFileError, match="truncated"):
            load_model(path)

    def test_checksum_tamper(self, tmp_path, forest):
        path = save_model(forest, tmp_path / "m.json")
        rewrite(path, lambda doc: doc["hyperparameters"].update(seed=99))
        with pytest.raises(ModelFileError, match="checksum"):
            load_model(path)

    def test_not_a_model(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ModelFileError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "absent.json")

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_bytes(b'{"format_version": 1, "kind": "\xff"}')
        with pytest.raises(ModelFileError, match="UTF-8"):
            load_model(path)
