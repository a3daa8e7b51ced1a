import json

import pandas as pd
import pytest

from cli import EXIT_DATA, EXIT_OK, EXIT_TRAINING, EXIT_USAGE, main
from conftest import write_config
from modules.persistence import load_model


@pytest.fixture
def corpus(tmp_path, capsys):
    """Vehicle-corpus files written by the synth command"""
    code = main(["synth", "corpus", "--scale", "100", "--features", "4", "--seed", "5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    printed = capsys.readouterr().out.split()
    assert printed[-1] == str(tmp_path / "config.json")
    return tmp_path


def run(capsys, *argv):
    code = main([str(arg) for arg in argv])
    return code, capsys.readouterr().out


class TestDatasets:

    def test_synth_writes_config(self, corpus):
        config = json.loads((corpus / "config.json").read_text())
        assert config["train"] == {"original": "original.csv", "extra": "extra.csv"}
        assert config["seed"] == 5

    def test_synth_blobs(self, tmp_path, capsys):
        code, _ = run(capsys, "synth", "blobs", "--classes", "2", "--per-class", "10", "20", "--out", tmp_path)
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "blobs.csv")
        assert frame["label"].value_counts().sort_index().tolist() == [10, 20]

    def test_inspect(self, corpus, capsys):
        code, out = run(capsys, "inspect", corpus / "original.csv", "--format", "json")
        assert code == EXIT_OK
        document = json.loads(out)
        assert document["metadata"]["n_classes"] == 16
        assert {row["class"]: row["count"] for row in document["rows"]}["Boat"] == 79

    def test_split(self, corpus, capsys):
        code, _ = run(capsys, "split", corpus / "original.csv", "--out", corpus, "--seed", "1")
        assert code == EXIT_OK
        train = pd.read_csv(corpus / "original.train.csv")
        val = pd.read_csv(corpus / "original.val.csv")
        assert len(train) + len(val) == len(pd.read_csv(corpus / "original.csv"))

    def test_rebalance_balanced(self, corpus, capsys):
        out_dir = corpus / "variants"
        code, _ = run(capsys, "rebalance", corpus / "original.csv", "--extra", corpus / "extra.csv",
                      "--kind", "balanced", "--target", "20", "--out", out_dir)
        assert code == EXIT_OK
        manifest = json.loads((out_dir / "balanced.manifest.json").read_text())
        assert {entry["after"] for entry in manifest["classes"]} == {20}
        assert len(pd.read_csv(out_dir / "balanced.csv")) == 16 * 20

    def test_rebalance_needs_extra(self, corpus, capsys):
        code, _ = run(capsys, "rebalance", corpus / "original.csv", "--kind", "combined", "--out", corpus)
        assert code == EXIT_DATA

    def test_pca(self, corpus, capsys):
        code, out = run(capsys, "pca", corpus / "original.csv", "--out", corpus)
        assert code == EXIT_OK
        assert "explained_variance" in out
        for suffix in ("csv", "svg", "json"):
            assert (corpus / f"original.pca.{suffix}").exists()


class TestModels:

    def test_train_and_eval(self, corpus, capsys):
        code, out = run(capsys, "train", "--config", write_config(corpus))
        assert code == EXIT_OK
        assert "original_val" in out
        runs = corpus / "runs"
        for name in ("model_original.json", "train.md", "train.per_class.csv", "train.roc.csv"):
            assert (runs / name).exists()
        _, provenance = load_model(runs / "model_original.json", with_provenance=True)
        assert provenance["family"] == "adaboost"
        assert len(provenance["class_names"]) == 16

        code, out = run(capsys, "eval", runs / "model_original.json", corpus / "test_original.csv",
                        corpus / "test_extra.csv", "--format", "json")
        assert code == EXIT_OK
        rows = json.loads(out)["rows"]
        assert [row["eval_set"] for row in rows] == ["test_original", "test_extra"]
        assert all(0.0 <= row["accuracy"] <= 1.0 for row in rows)

    def test_gridsearch_then_report(self, corpus, capsys):
        config = write_config(corpus, grid={"n_estimators": [2, 3], "learning_rate": [0.1, 0.5]}, top_k=2)
        code, out = run(capsys, "gridsearch", "--config", config, "--format", "json")
        assert code == EXIT_OK
        assert [row["rank"] for row in json.loads(out)["rows"]] == [1, 2]
        saved = json.loads((corpus / "runs" / "gridsearch.json").read_text())
        assert saved["metadata"]["cells"] == 4
        assert saved["metadata"]["ranking"]

        code, out = run(capsys, "report", corpus / "runs" / "gridsearch.json", "--top", "3", "--format", "csv")
        assert code == EXIT_OK
        assert len(out.strip().splitlines()) == 1 + 3

    def test_all_cells_failing_is_a_training_error(self, corpus, capsys):
        config = write_config(corpus, grid={"learning_rate": [-1.0]})
        code, _ = run(capsys, "gridsearch", "--config", config)
        assert code == EXIT_TRAINING

    def test_seed_flag_overrides_config(self, corpus, capsys):
        run(capsys, "train", "--config", write_config(corpus), "--seed", "11", "--out", corpus / "seeded")
        _, provenance = load_model(corpus / "seeded" / "model_original.json", with_provenance=True)
        assert provenance["seed"] == 11


class TestPlanner:

    def test_hand_network(self, capsys):
        code, out = run(capsys, "plan-cnn", "--nf", "8", "--nresb", "0", "0", "0", "--classes", "4",
                        "--input", "32", "32", "3", "--format", "json")
        assert code == EXIT_OK
        assert json.loads(out)["metadata"]["total_params"] == 7212

    def test_preset(self, capsys):
        code, out = run(capsys, "plan-cnn", "--preset", "best-model")
        assert code == EXIT_OK
        assert "total params:" in out

    def test_bad_bottleneck_width(self, capsys):
        code, _ = run(capsys, "plan-cnn", "--nf", "6", "--block", "bottleneck", "--nresb", "1", "0", "0")
        assert code == EXIT_USAGE


class TestExitCodes:

    def test_missing_config(self, capsys):
        assert run(capsys, "train")[0] == EXIT_USAGE

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "inspect", tmp_path / "absent.csv")[0] == EXIT_DATA

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("name,f0\na,1\n")
        assert run(capsys, "inspect", path)[0] == EXIT_DATA

    def test_invalid_utf8_is_a_data_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_bytes(b"label,f0\n\xff\xfe,1\n")
        assert run(capsys, "inspect", path)[0] == EXIT_DATA

    @pytest.mark.parametrize("argv", [
        ["bogus"],
        ["inspect"],
        ["plan-cnn", "--seed", "-1"],
        ["plan-cnn", "--format", "html"],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        assert excinfo.value.code == EXIT_USAGE
