import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .fileio import atomic_write_text

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("markdown", "csv", "json")
MISSING = "n/a"
DECIMALS = 4


def _plain(value):
    """JSON-safe python scalar; NaN and None both become None"""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    return value


def table_records(table):
    return [{column: _plain(value) for column, value in row.items()} for row in table.to_dict(orient="records")]


def accuracy_columns(table):
    """Paired <pool>_val / <pool>_test columns, in table order"""
    return [column for column in table.columns if column.endswith("_val") or column.endswith("_test")]


def _cell(value):
    value = _plain(value)
    if value is None:
        return MISSING
    if isinstance(value, float):
        return f"{value:.{DECIMALS}f}"
    return str(value)


def render_markdown(table, metadata=None):
    columns = list(table.columns)
    lines = []
    if metadata:
        for key in sorted(metadata):
            lines.append(f"<!-- {key}: {json.dumps(_plain(metadata[key]), sort_keys=True)} -->")
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("|" + "|".join("---:" if column in accuracy_columns(table) else "---" for column in columns) + "|")
    for record in table_records(table):
        lines.append("| " + " | ".join(_cell(record[column]) for column in columns) + " |")
    return "\n".join(lines) + "\n"


def render_csv(table):
    return table.to_csv(index=False, lineterminator="\n", float_format="%.17g")


def render_json(table, metadata=None, reports=None):
    document = {"metadata": _plain(metadata or {}), "rows": table_records(table)}
    if reports:
        document["reports"] = {
            name: [report.to_dict() for report in _report_list(entry)] for name, entry in reports.items()
        }
    return json.dumps(_plain(document), sort_keys=True, indent=2) + "\n"


def render_report(table, fmt, metadata=None, reports=None):
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got '{fmt}'")
    if table.empty:
        raise ValueError("cannot render an empty results table")
    if fmt == "markdown":
        return render_markdown(table, metadata)
    if fmt == "csv":
        return render_csv(table)
    return render_json(table, metadata, reports)


def _report_list(entry):
    if isinstance(entry, dict):
        return [entry[key] for key in sorted(entry)]
    if isinstance(entry, (list, tuple)):
        return list(entry)
    return [entry]


def per_class_sidecar(reports):
    """Per-class accuracy rows (bar chart data) for {configuration: reports}"""
    frames = []
    for name in reports:
        for report in _report_list(reports[name]):
            frame = report.per_class_frame()
            frame.insert(0, "eval_set", report.eval_set_name)
            frame.insert(0, "configuration", name)
            frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def roc_sidecar(reports):
    """ROC points of every scoreable class, one row per point"""
    rows = []
    for name in reports:
        for report in _report_list(reports[name]):
            for class_name, points in zip(report.class_names, report.roc):
                if points is None:
                    continue
                for fpr, tpr in points:
                    rows.append({
                        "configuration": name,
                        "eval_set": report.eval_set_name,
                        "class": class_name,
                        "fpr": float(fpr),
                        "tpr": float(tpr),
                    })
    return pd.DataFrame(rows, columns=["configuration", "eval_set", "class", "fpr", "tpr"])


def sidecar_paths(path):
    path = Path(path)
    stem = path.with_suffix("")
    return Path(f"{stem}.per_class.csv"), Path(f"{stem}.roc.csv")


def emit_report(table, fmt, path, reports=None, metadata=None):
    """Write the results table in `fmt`; with reports, also the per-class and ROC CSV sidecars.

    reports maps configuration name -> EvalReport, a list of them, or a dict
    keyed by (pool, split).
    """
    text = render_report(table, fmt, metadata, reports)
    try:
        path = atomic_write_text(path, text)
        written = [path]
        if reports:
            per_class_path, roc_path = sidecar_paths(path)
            written.append(atomic_write_text(per_class_path, render_csv(per_class_sidecar(reports))))
            written.append(atomic_write_text(roc_path, render_csv(roc_sidecar(reports))))
    except OSError as exc:
        raise DataError(f"cannot write report to {path}: {exc}")
    logger.info("Wrote %s report with %s rows to %s", fmt, len(table), path)
    return written


def load_results(path):
    """Results table (and metadata) from a JSON or CSV report written by emit_report"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"results file not found: {path}")
    if path.suffix.lower() == ".csv":
        try:
            return pd.read_csv(path), {}
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise DataError(f"{path}: unreadable results CSV ({exc})")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg})")
    if not isinstance(document, dict) or "rows" not in document:
        raise DataError(f"{path}: not a results report")
    return pd.DataFrame(document["rows"]), document.get("metadata", {})
