import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import FAMILY_DEFAULTS, grid_cells
from .data import align_classes, concat_datasets, load_features, read_label_map, stratified_split
from .ensemble import fit_adaboost, fit_forest, fit_voting, oob_accuracy
from .evaluation import evaluate
from .rebalance import VariantSpec, build_variant

logger = logging.getLogger(__name__)

RANKING_NOTE = "ranked by validation accuracy on the primary eval pool"


@dataclass(frozen=True)
class DataBundle:
    """Training splits per source plus the named evaluation pools.

    pools maps pool name -> {"val": FeatureDataset, "test": FeatureDataset or None}.
    """

    original: object  # SplitPair
    extra: object  # SplitPair or None
    pools: dict
    class_names: tuple

    @property
    def extra_train(self):
        return None if self.extra is None else self.extra.train


def build_bundle(original, extra=None, test_original=None, test_extra=None,
                 train_fraction=0.8, stratified=True, seed=0):
    """Split each training source and derive the 'original' and 'combined' pools"""
    original_split = stratified_split(original, train_fraction, seed, stratified)
    pools = {"original": {"val": original_split.val, "test": test_original}}
    extra_split = None
    if extra is not None:
        extra_split = stratified_split(extra, train_fraction, seed + 1, stratified)
        combined_test = test_original
        if test_original is not None and test_extra is not None:
            combined_test = concat_datasets(test_original, test_extra)
        pools["combined"] = {
            "val": concat_datasets(original_split.val, extra_split.val),
            "test": combined_test,
        }
    return DataBundle(original_split, extra_split, pools, original.class_names)


def load_bundle(cfg):
    """Read every file a RunConfig names, on one shared class table"""
    label_map = read_label_map(cfg.label_map) if cfg.label_map is not None else None
    sets = {
        ("train", name): load_features(path, label_map=label_map) for name, path in cfg.train.items()
    }
    sets.update({
        ("test", name): load_features(path, label_map=label_map) for name, path in cfg.test.items()
    })
    class_names = list(label_map or ())
    for ds in sets.values():
        class_names += [name for name in ds.class_names if name not in class_names]
    sets = {key: align_classes(ds, class_names) for key, ds in sets.items()}
    return build_bundle(
        sets[("train", "original")],
        sets.get(("train", "extra")),
        sets.get(("test", "original")),
        sets.get(("test", "extra")),
        cfg.split.train_fraction,
        cfg.split.stratified,
        cfg.seed,
    )


def cell_seed(seed, index):
    """Seed of grid cell `index`, derived from the run seed"""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def fit_family(family, params, ds, seed, n_jobs=1):
    """Train one model of the named family with defaults filled in"""
    if family == "forest":
        p = {**FAMILY_DEFAULTS["forest"], **params}
        return fit_forest(ds, p["n_estimators"], p["max_samples"], p["max_depth"], seed, n_jobs)
    if family == "adaboost":
        p = {**FAMILY_DEFAULTS["adaboost"], **params}
        return fit_adaboost(ds, p["n_estimators"], p["learning_rate"], p["max_depth"], seed)
    if family == "voting":
        forest = fit_family("forest", params.get("forest", {}), ds, seed, n_jobs)
        boost = fit_family("adaboost", params.get("adaboost", {}), ds, seed)
        return fit_voting([forest, boost], params.get("weights"))
    raise ValueError(f"unknown model family '{family}'")


def evaluate_pools(model, bundle):
    """EvalReports keyed by (pool, split) for every populated pool split"""
    reports = {}
    for pool, splits in bundle.pools.items():
        for split in ("val", "test"):
            if splits.get(split) is not None:
                reports[(pool, split)] = evaluate(model, splits[split], f"{pool}/{split}")
    return reports


def accuracy_row(reports, bundle):
    row = {}
    for pool in bundle.pools:
        for split in ("val", "test"):
            report = reports.get((pool, split))
            row[f"{pool}_{split}"] = None if report is None else report.overall_accuracy
    return row


def configuration_label(family, cell):
    """Row label in the '[variant; estimators; lr; DT_depth]' style of the result tables"""
    if family == "adaboost":
        parts = [cell["variant"], cell.get("n_estimators"), cell.get("learning_rate"),
                 f"DT_{cell.get('max_depth')}"]
    elif family == "forest":
        parts = [cell["variant"], cell.get("n_estimators"), cell.get("max_samples")]
    else:
        parts = [cell["variant"]]
    return "[" + "; ".join(str(p) for p in parts if p is not None) + "]"


def _cell_label(family, base_params, cell):
    return configuration_label(family, {**FAMILY_DEFAULTS.get(family, {}), **base_params, **cell})


def _run_cell(index, family, cell, base_params, train_ds, bundle, seed):
    params = {**base_params, **{key: value for key, value in cell.items() if key != "variant"}}
    row = {"cell": index, "configuration": _cell_label(family, base_params, cell), **cell}
    try:
        model = fit_family(family, params, train_ds, seed)
        row.update(accuracy_row(evaluate_pools(model, bundle), bundle))
        if family == "forest":
            row["oob"] = oob_accuracy(model, train_ds).accuracy
        row["status"] = "ok"
        row["error"] = None
    except (ValueError, RuntimeError) as exc:
        logger.warning("Grid cell %s %s failed: %s", index, row["configuration"], exc)
        row.update({"status": "failed", "error": str(exc)})
    return row


def build_variants(bundle, kinds, base_spec, n_jobs=1):
    """Each requested variant of the bundle's training rows, built once"""
    variants = {}
    for kind in dict.fromkeys(kinds):
        spec = VariantSpec(kind, base_spec.smote_k, base_spec.partial_theta,
                           base_spec.balanced_target, base_spec.seed)
        try:
            variants[kind] = build_variant(bundle.original.train, bundle.extra_train, spec, n_jobs)
        except ValueError as exc:
            logger.warning("Variant %s could not be built: %s", kind, exc)
            variants[kind] = exc
            continue
        logger.info("Variant %s: %s training rows", kind, variants[kind].n_samples)
    return variants


def rank_results(results, primary_eval):
    key = f"{primary_eval}_val"
    frame = results.copy()
    frame["_ok"] = frame["status"] == "ok"
    scores = frame[key] if key in frame else pd.Series(np.nan, index=frame.index)
    frame["_key"] = pd.to_numeric(scores, errors="coerce").fillna(-1.0)
    frame = frame.sort_values(["_ok", "_key", "cell"], ascending=[False, False, True], kind="mergesort")
    frame = frame.drop(columns=["_ok", "_key"]).reset_index(drop=True)
    frame.insert(0, "rank", range(1, len(frame) + 1))
    return frame


def run_gridsearch(cfg, bundle=None):
    """Train and evaluate every grid cell; returns the ranked results table.

    Grid axes override the configured model params. Variants are built once
    with the run seed; cell i trains with cell_seed(cfg.seed, i), so any cell
    can be re-run on its own.
    """
    bundle = bundle or load_bundle(cfg)
    family = cfg.model.family
    cells = grid_cells(cfg)
    base_spec = VariantSpec(cfg.variant.kind, cfg.variant.smote_k, cfg.variant.partial_theta,
                            cfg.variant.balanced_target, cfg.seed)
    variants = build_variants(bundle, [cell["variant"] for cell in cells], base_spec)
    logger.info("Grid search: %s cells of %s on %s variants", len(cells), family, len(variants))

    jobs = []
    failed_rows = {}
    for index, cell in enumerate(cells):
        train_ds = variants[cell["variant"]]
        if isinstance(train_ds, Exception):
            failed_rows[index] = {
                "cell": index, "configuration": _cell_label(family, cfg.model.params, cell), **cell,
                "status": "failed", "error": str(train_ds),
            }
            continue
        jobs.append((index, cell, train_ds))

    rows = Parallel(n_jobs=cfg.jobs)(
        delayed(_run_cell)(index, family, cell, cfg.model.params, train_ds, bundle, cell_seed(cfg.seed, index))
        for index, cell, train_ds in jobs
    )
    rows = sorted(list(rows) + list(failed_rows.values()), key=lambda row: row["cell"])
    return rank_results(pd.DataFrame(rows), cfg.primary_eval)


def forest_tuning_curve(bundle, train_ds, axis, values, params=None, seed=0, pool="original", n_jobs=1):
    """OOB, validation and test accuracy of a forest as one hyperparameter varies"""
    if axis not in ("n_estimators", "max_samples"):
        raise ValueError(f"forest tuning axis must be n_estimators or max_samples, got '{axis}'")
    rows = []
    for value in values:
        model = fit_family("forest", {**(params or {}), axis: value}, train_ds, seed, n_jobs)
        reports = evaluate_pools(model, bundle)
        rows.append({
            axis: value,
            "oob": oob_accuracy(model, train_ds).accuracy,
            "val": reports[(pool, "val")].overall_accuracy,
            "test": reports[(pool, "test")].overall_accuracy if (pool, "test") in reports else None,
        })
    return pd.DataFrame(rows)


def depth_study(bundle, train_ds, depths, params=None, seed=0, pool="original", split="val"):
    """Per-class accuracy of AdaBoost for each base-learner depth (classes x depths)"""
    target = bundle.pools[pool][split]
    columns = {}
    for depth in depths:
        model = fit_family("adaboost", {**(params or {}), "max_depth": depth}, train_ds, seed)
        columns[f"DT_{depth}"] = list(evaluate(model, target, f"{pool}/{split}").per_class_accuracy)
    return pd.DataFrame(columns, index=list(bundle.class_names))


def compare_models(models, bundle):
    """One accuracy row per named model, plus the EvalReports behind it"""
    rows, all_reports = [], {}
    for name, model in models.items():
        reports = evaluate_pools(model, bundle)
        all_reports[name] = reports
        rows.append({"configuration": name, **accuracy_row(reports, bundle)})
    return pd.DataFrame(rows), all_reports
