import json

import pandas as pd
import pytest

from conftest import make_blobs
from modules.errors import DataError
from modules.experiment import build_bundle, compare_models
from modules.rebalance import VARIANT_KINDS
from modules.reporting import (
    MISSING,
    emit_report,
    load_results,
    render_csv,
    render_json,
    render_markdown,
    render_report,
    sidecar_paths,
)
from modules.tree import fit_tree


@pytest.fixture
def comparison():
    bundle = build_bundle(
        make_blobs([40, 20], seed=1, separation=3.0),
        make_blobs([10, 30], seed=2, separation=3.0),
        make_blobs([20, 10], seed=3, separation=3.0),
        make_blobs([5, 15], seed=4, separation=3.0),
        seed=2,
    )
    return compare_models({"[original; DT_3]": fit_tree(bundle.original.train, max_depth=3)}, bundle)


def markdown_rows(text):
    return [line for line in text.splitlines() if line.startswith("| ")][1:]


class TestRender:

    def test_one_model_two_pools(self, comparison):
        table, _ = comparison
        rows = markdown_rows(render_markdown(table))
        assert len(rows) == 1
        cells = [cell.strip() for cell in rows[0].strip("|").split("|")]
        assert cells[0] == "[original; DT_3]"
        assert len(cells[1:]) == 4
        assert all(len(cell.split(".")[1]) == 4 for cell in cells[1:])

    def test_json_matches_markdown(self, comparison):
        table, reports = comparison
        markdown = render_markdown(table)
        document = json.loads(render_json(table, {"seed": 0}, reports))
        row = document["rows"][0]
        for column in ("original_val", "original_test", "combined_val", "combined_test"):
            assert f"{row[column]:.4f}" in markdown
        assert document["metadata"] == {"seed": 0}
        assert len(document["reports"]["[original; DT_3]"]) == 4

    def test_six_variant_rows(self):
        table = pd.DataFrame({
            "configuration": [f"[{kind}; 100; 0.5; DT_3]" for kind in VARIANT_KINDS],
            "original_val": [0.5 + 0.01 * i for i in range(6)],
            "original_test": [0.4] * 6,
        })
        rows = markdown_rows(render_markdown(table))
        assert [row.split("|")[1].strip() for row in rows] == list(table["configuration"])

    def test_missing_values(self):
        table = pd.DataFrame({"configuration": ["a"], "original_val": [float("nan")], "error": [None]})
        assert markdown_rows(render_markdown(table)) == [f"| a | {MISSING} | {MISSING} |"]
        assert json.loads(render_json(table))["rows"] == [
            {"configuration": "a", "original_val": None, "error": None},
        ]

    def test_metadata_comments(self):
        text = render_markdown(pd.DataFrame({"x": [1]}), {"seed": 3, "note": "ranked"})
        assert text.splitlines()[:2] == ['<!-- note: "ranked" -->', "<!-- seed: 3 -->"]

    def test_csv_keeps_full_precision(self):
        text = render_csv(pd.DataFrame({"configuration": ["a"], "original_val": [2 / 3]}))
        assert text == "configuration,original_val\na,0.66666666666666663\n"

    def test_empty_table(self):
        with pytest.raises(ValueError, match="empty"):
            render_report(pd.DataFrame(), "markdown")

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="format"):
            render_report(pd.DataFrame({"x": [1]}), "html")


class TestEmit:

    def test_sidecars(self, tmp_path, comparison):
        table, reports = comparison
        written = emit_report(table, "markdown", tmp_path / "compare.md", reports)
        per_class_path, roc_path = sidecar_paths(tmp_path / "compare.md")
        assert written == [tmp_path / "compare.md", per_class_path, roc_path]
        per_class = pd.read_csv(per_class_path)
        assert list(per_class.columns) == ["configuration", "eval_set", "class", "support", "accuracy", "auc"]
        assert len(per_class) == 4 * 2
        roc = pd.read_csv(roc_path)
        assert list(roc.columns) == ["configuration", "eval_set", "class", "fpr", "tpr"]
        assert roc["fpr"].between(0.0, 1.0).all()

    def test_no_sidecars_without_reports(self, tmp_path, comparison):
        table, _ = comparison
        assert emit_report(table, "csv", tmp_path / "t.csv") == [tmp_path / "t.csv"]
        assert sorted(p.name for p in tmp_path.iterdir()) == ["t.csv"]

    def test_unwritable_target(self, tmp_path, comparison):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(DataError, match="cannot write"):
            emit_report(comparison[0], "json", blocker / "out.json")


class TestLoadResults:

    @pytest.mark.parametrize("fmt,name", [("json", "r.json"), ("csv", "r.csv")])
    def test_reads_back_rows(self, tmp_path, comparison, fmt, name):
        table, _ = comparison
        emit_report(table, fmt, tmp_path / name, metadata={"seed": 1})
        frame, metadata = load_results(tmp_path / name)
        assert frame["configuration"].tolist() == ["[original; DT_3]"]
        assert frame["original_val"].iloc[0] == pytest.approx(table["original_val"].iloc[0])
        assert metadata == ({"seed": 1} if fmt == "json" else {})

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_results(tmp_path / "absent.json")

    @pytest.mark.parametrize("text", ["{broken", "[1, 2]"])
    def test_invalid_json(self, tmp_path, text):
        path = tmp_path / "r.json"
        path.write_text(text)
        with pytest.raises(DataError):
            load_results(path)
