"""Command-line surface: datasets, variants, training, grid search, evaluation and reports.

Tables go to stdout; logs go to stderr. Exit codes: 0 success, 1 usage,
2 data error, 3 training error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from modules.config import load_run_config
from modules.data import (
    SOURCE_TEST_COUNTS,
    SOURCE_TRAIN_COUNTS,
    SYNTHETIC_TAG,
    align_classes,
    class_distribution,
    corpus_dataset,
    fingerprint,
    infer_format,
    load_features,
    read_label_map,
    save_features,
    scale_counts,
    stratified_split,
    synth_blobs,
)
from modules.errors import ConfigError, DataError, TrainingError
from modules.evaluation import evaluate
from modules.experiment import RANKING_NOTE, build_variants, compare_models, fit_family, load_bundle, run_gridsearch
from modules.fileio import atomic_write_text
from modules.persistence import load_model, save_model
from modules.planner import PRESETS, NetConfig, plan_frame, plan_network
from modules.projection import pca2_fit, projection_frame, write_scatter_csv, write_scatter_svg
from modules.rebalance import VARIANT_KINDS, VariantSpec, build_variant, variant_manifest
from modules.reporting import REPORT_FORMATS, emit_report, load_results, render_report

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

EXTENSIONS = {"markdown": "md", "csv": "csv", "json": "json"}
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CliParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with EXIT_USAGE"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def configure_logging(verbose=0, quiet=False):
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _emit(args, table, name, metadata=None, reports=None):
    """Print the table in --format and, with --out, also write it (plus sidecars) there"""
    sys.stdout.write(render_report(table, args.format, metadata))
    if args.out is not None:
        emit_report(table, args.format, Path(args.out) / f"{name}.{EXTENSIONS[args.format]}", reports, metadata)


def _label_map(args):
    return read_label_map(args.label_map) if getattr(args, "label_map", None) else None


def _out_dir(args, default="."):
    return Path(args.out if args.out is not None else default)


def _seed_or(args, default=0):
    return default if args.seed is None else args.seed


# Datasets

def cmd_inspect(args):
    ds = load_features(args.path, label_map=_label_map(args))
    synthetic = [int(np.sum((ds.labels == c) & (ds.source_tags == SYNTHETIC_TAG))) for c in range(ds.n_classes)]
    table = pd.DataFrame({
        "class": list(ds.class_names),
        "count": list(class_distribution(ds).counts),
        "synthetic": synthetic,
    })
    metadata = {
        "path": str(args.path),
        "n_samples": ds.n_samples,
        "n_features": ds.n_features,
        "n_classes": ds.n_classes,
        "fingerprint": fingerprint(ds),
    }
    _emit(args, table, "inspect", metadata)
    return EXIT_OK


def cmd_split(args):
    ds = load_features(args.path, label_map=_label_map(args))
    pair = stratified_split(ds, args.train_fraction, _seed_or(args), not args.no_stratify)
    out = _out_dir(args)
    path = Path(args.path)
    fmt = infer_format(path)
    for name, part in (("train", pair.train), ("val", pair.val)):
        save_features(part, out / f"{path.stem}.{name}{path.suffix}", fmt)
    table = pd.DataFrame({
        "class": list(ds.class_names),
        "train": list(class_distribution(pair.train).counts),
        "val": list(class_distribution(pair.val).counts),
    })
    sys.stdout.write(render_report(table, args.format))
    return EXIT_OK


def cmd_synth(args):
    seed = _seed_or(args)
    out = _out_dir(args)
    suffix = ".csv" if args.file_format == "csv" else ".bin"
    if args.kind == "blobs":
        counts = args.per_class * args.classes if len(args.per_class) == 1 else args.per_class
        if len(counts) != args.classes:
            raise ValueError(f"--per-class needs 1 or {args.classes} values, got {len(counts)}")
        centers = np.random.default_rng(seed).normal(0.0, args.separation, size=(args.classes, args.features))
        ds = synth_blobs([(center, args.spread, n) for center, n in zip(centers, counts)], seed + 1)
        written = [save_features(ds, out / f"blobs{suffix}", args.file_format)]
    else:
        train_counts = scale_counts(SOURCE_TRAIN_COUNTS, args.scale)
        test_counts = scale_counts(SOURCE_TEST_COUNTS, args.scale)
        parts = {
            "original": corpus_dataset(train_counts, (1,), args.features, seed, args.spread, args.separation),
            "extra": corpus_dataset(train_counts, (2, 3), args.features, seed, args.spread, args.separation),
            "test_original": corpus_dataset(test_counts, (1,), args.features, seed, args.spread,
                                          args.separation, stream=1),
            "test_extra": corpus_dataset(test_counts, (2, 3), args.features, seed, args.spread,
                                          args.separation, stream=1),
        }
        written = [save_features(ds, out / f"{name}{suffix}", args.file_format) for name, ds in parts.items()]
        config = {
            "train": {"original": f"original{suffix}", "extra": f"extra{suffix}"},
            "test": {"original": f"test_original{suffix}", "extra": f"test_extra{suffix}"},
            "seed": seed,
        }
        written.append(atomic_write_text(out / "config.json", json.dumps(config, indent=2, sort_keys=True) + "\n"))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_rebalance(args):
    label_map = _label_map(args)
    original = load_features(args.path, label_map=label_map)
    extra = None
    if args.extra is not None:
        extra = load_features(args.extra, label_map=label_map)
        names = list(original.class_names) + [n for n in extra.class_names if n not in original.class_names]
        original, extra = align_classes(original, names), align_classes(extra, names)
    spec = VariantSpec(args.kind, args.k, args.theta, args.target, _seed_or(args))
    variant = build_variant(original, extra, spec, args.jobs or 1)

    out = _out_dir(args)
    path = Path(args.path)
    save_features(variant, out / f"{spec.kind}{path.suffix}", infer_format(path))
    manifest = variant_manifest(original, variant, spec)
    atomic_write_text(out / f"{spec.kind}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    table = pd.DataFrame(manifest["classes"]).rename(columns={"name": "class"})
    sys.stdout.write(render_report(table, args.format, {"kind": spec.kind, "parameters": spec.to_dict()}))
    return EXIT_OK


# Models

def _run_config(args):
    if args.config is None:
        raise ConfigError(f"'{args.command}' needs --config")
    return load_run_config(args.config, seed=args.seed, out=args.out, jobs=args.jobs)


def _provenance(cfg, spec, train_ds):
    return {
        "variant": spec.to_dict(),
        "seed": cfg.seed,
        "family": cfg.model.family,
        "dataset_fingerprint": fingerprint(train_ds),
        "class_names": list(train_ds.class_names),
    }


def cmd_train(args):
    cfg = _run_config(args)
    bundle = load_bundle(cfg)
    kinds = VARIANT_KINDS if args.all_variants else (cfg.variant.kind,)
    base = VariantSpec(cfg.variant.kind, cfg.variant.smote_k, cfg.variant.partial_theta,
                       cfg.variant.balanced_target, cfg.seed)
    variants = build_variants(bundle, kinds, base, cfg.jobs)

    models = {}
    for kind, train_ds in variants.items():
        if isinstance(train_ds, Exception):
            raise train_ds
        spec = VariantSpec(kind, base.smote_k, base.partial_theta, base.balanced_target, base.seed)
        model = fit_family(cfg.model.family, cfg.model.params, train_ds, cfg.seed, cfg.jobs)
        save_model(model, Path(cfg.out) / f"model_{kind}.json", _provenance(cfg, spec, train_ds))
        models[kind] = model

    table, reports = compare_models(models, bundle)
    metadata = {
        "family": cfg.model.family,
        "hyperparameters": cfg.model.resolved_params(),
        "seed": cfg.seed,
        "variant": base.to_dict(),
    }
    if cfg.model.family != "forest":
        metadata["boosting"] = "SAMME"
    sys.stdout.write(render_report(table, args.format, metadata))
    emit_report(table, args.format, Path(cfg.out) / f"train.{EXTENSIONS[args.format]}", reports, metadata)
    return EXIT_OK


def cmd_gridsearch(args):
    cfg = _run_config(args)
    results = run_gridsearch(cfg)
    metadata = {
        "family": cfg.model.family,
        "grid": cfg.grid,
        "variant": cfg.variant.to_dict(),
        "seed": cfg.seed,
        "primary_eval": cfg.primary_eval,
        "ranking": RANKING_NOTE,
        "cells": len(results),
        "failed": int((results["status"] != "ok").sum()),
    }
    if cfg.model.family == "adaboost":
        metadata["boosting"] = "SAMME"
    emit_report(results, args.format, Path(cfg.out) / f"gridsearch.{EXTENSIONS[args.format]}", metadata=metadata)
    sys.stdout.write(render_report(results.head(cfg.top_k), args.format, metadata))
    return EXIT_OK if metadata["failed"] < len(results) else EXIT_TRAINING


def cmd_eval(args):
    model, provenance = load_model(args.model, with_provenance=True)
    class_names = provenance.get("class_names")
    reports = {}
    rows = []
    for path in args.data:
        ds = load_features(path, label_map=_label_map(args))
        if class_names:
            ds = align_classes(ds, class_names)
        report = evaluate(model, ds, Path(path).stem)
        reports[report.eval_set_name] = report
        rows.append({
            "configuration": Path(args.model).stem,
            "eval_set": report.eval_set_name,
            "n_samples": report.n_samples,
            "accuracy": report.overall_accuracy,
        })
    _emit(args, pd.DataFrame(rows), "eval", {"model": str(args.model)}, reports)
    return EXIT_OK


# Diagnostics

def cmd_pca(args):
    ds = load_features(args.path, label_map=_label_map(args))
    model = pca2_fit(ds)
    frame = projection_frame(model, ds)
    out = _out_dir(args)
    stem = Path(args.path).stem
    write_scatter_csv(frame, out / f"{stem}.pca.csv")
    write_scatter_svg(frame, ds.class_names, out / f"{stem}.pca.svg", title=f"PCA projection - {stem}")
    atomic_write_text(out / f"{stem}.pca.json", json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n")

    table = pd.DataFrame({
        "component": ["pc1", "pc2"],
        "explained_variance": [float(v) for v in model.explained_variance],
    })
    sys.stdout.write(render_report(table, args.format))
    return EXIT_OK


def cmd_plan_cnn(args):
    if args.preset is not None:
        cfg = PRESETS[args.preset]
    else:
        cfg = NetConfig(args.nf, args.block, tuple(args.nresb), args.batchnorm, args.classes, tuple(args.input))
    plan = plan_network(cfg)
    metadata = {"preset": args.preset, "total_params": plan.total_params, "notes": list(plan.notes)}
    _emit(args, plan_frame(plan), "plan", metadata)
    if args.format == "markdown":
        sys.stdout.write(f"\ntotal params: {plan.total_params:,}\n")
    return EXIT_OK


def cmd_report(args):
    table, metadata = load_results(args.results)
    if args.top is not None:
        table = table.head(args.top)
    _emit(args, table, Path(args.results).stem, metadata)
    return EXIT_OK


def build_parser():
    common = CliParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--seed", type=_seed, help="seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--jobs", type=_positive_int, help="parallel workers")
    common.add_argument("--format", choices=REPORT_FORMATS, default="markdown", help="table format")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    parser = CliParser(prog="cli.py", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="class distribution of a feature file")
    p.add_argument("path", type=Path)
    p.add_argument("--label-map", type=Path)
    p.set_defaults(handler=cmd_inspect)

    p = sub.add_parser("split", parents=[common], help="train/validation split of a feature file")
    p.add_argument("path", type=Path)
    p.add_argument("--label-map", type=Path)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--no-stratify", action="store_true")
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("synth", parents=[common], help="write synthetic feature files")
    p.add_argument("kind", choices=("blobs", "corpus"))
    p.add_argument("--classes", type=_positive_int, default=3)
    p.add_argument("--per-class", type=_positive_int, nargs="+", default=[100])
    p.add_argument("--features", type=_positive_int, default=8)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--scale", type=float, default=1.0, help="divide the vehicle corpus count tables by this factor")
    p.add_argument("--file-format", choices=("csv", "binary"), default="csv")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("rebalance", parents=[common], help="build one training-set variant")
    p.add_argument("path", type=Path, help="original training rows")
    p.add_argument("--extra", type=Path, help="rows from the extra sources")
    p.add_argument("--label-map", type=Path)
    p.add_argument("--kind", choices=VARIANT_KINDS, required=True)
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--theta", type=float, default=0.25)
    p.add_argument("--target", type=_positive_int, default=2000)
    p.set_defaults(handler=cmd_rebalance)

    p = sub.add_parser("train", parents=[common], help="train the configured model and save it")
    p.add_argument("--all-variants", action="store_true", help="one model per training variant")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("gridsearch", parents=[common], help="train and rank every grid cell")
    p.set_defaults(handler=cmd_gridsearch)

    p = sub.add_parser("eval", parents=[common], help="evaluate a saved model on feature files")
    p.add_argument("model", type=Path)
    p.add_argument("data", type=Path, nargs="+")
    p.add_argument("--label-map", type=Path)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("pca", parents=[common], help="2-D PCA scatter (CSV and SVG)")
    p.add_argument("path", type=Path)
    p.add_argument("--label-map", type=Path)
    p.set_defaults(handler=cmd_pca)

    p = sub.add_parser("plan-cnn", parents=[common], help="layer shapes and parameter counts of a CNN")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--nf", type=_positive_int, default=64)
    p.add_argument("--block", choices=("plain", "bottleneck"), default="plain")
    p.add_argument("--nresb", type=int, nargs=3, default=[0, 0, 0], metavar=("S1", "S2", "S3"))
    p.add_argument("--batchnorm", action="store_true")
    p.add_argument("--classes", type=_positive_int, default=16)
    p.add_argument("--input", type=_positive_int, nargs=3, default=[128, 128, 3], metavar=("H", "W", "C"))
    p.set_defaults(handler=cmd_plan_cnn)

    p = sub.add_parser("report", parents=[common], help="re-render a saved results file")
    p.add_argument("results", type=Path)
    p.add_argument("--top", type=_positive_int)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except TrainingError as exc:
        logger.error("training failed: %s", exc)
        return EXIT_TRAINING
    except (DataError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except ValueError as exc:
        logger.error("invalid argument: %s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
