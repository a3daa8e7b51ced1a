import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist

from .data import SYNTHETIC_TAG, FeatureDataset, class_distribution, concat_datasets
from .errors import DataError

logger = logging.getLogger(__name__)

VARIANT_KINDS = ("original", "combined", "smote", "smote_combined", "smote_partial", "balanced")
NEEDS_EXTRAS = ("combined", "smote_combined", "smote_partial", "balanced")

DEFAULT_SMOTE_K = 5
DEFAULT_PARTIAL_THETA = 0.25
DEFAULT_BALANCED_TARGET = 2000

_NEIGHBOR_CHUNK = 512


@dataclass(frozen=True)
class SmoteParams:
    """per_class_target[c] == 0 leaves class c unchanged"""

    per_class_target: tuple
    k: int = DEFAULT_SMOTE_K
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"SMOTE k must be >= 1, got {self.k}")
        object.__setattr__(self, "per_class_target", tuple(int(t) for t in self.per_class_target))
        if any(t < 0 for t in self.per_class_target):
            raise ValueError("SMOTE targets must be non-negative")


@dataclass(frozen=True)
class VariantSpec:
    kind: str = "original"
    smote_k: int = DEFAULT_SMOTE_K
    partial_theta: float = DEFAULT_PARTIAL_THETA
    balanced_target: int = DEFAULT_BALANCED_TARGET
    seed: int = 0

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant kind '{self.kind}', expected one of {VARIANT_KINDS}")
        if not 0.0 < self.partial_theta <= 1.0:
            raise ValueError(f"partial_theta must lie in (0, 1], got {self.partial_theta}")
        if self.balanced_target < 1:
            raise ValueError(f"balanced_target must be positive, got {self.balanced_target}")
        if self.smote_k < 1:
            raise ValueError(f"smote_k must be >= 1, got {self.smote_k}")

    def to_dict(self):
        return asdict(self)


def nearest_neighbors(points, rows, k):
    """Indices of the k nearest rows of points for each of the given row indices.

    Exact Euclidean full scan; a row is never its own neighbour. Equal
    distances resolve to the lower index.
    """
    result = np.empty((len(rows), k), dtype=np.int64)
    for start in range(0, len(rows), _NEIGHBOR_CHUNK):
        block = rows[start:start + _NEIGHBOR_CHUNK]
        dist = cdist(points[block], points)
        dist[np.arange(len(block)), block] = np.inf
        result[start:start + len(block)] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return result


def _smote_class(members, n_new, k, seed):
    """n_new synthetic rows interpolated between members and their neighbours"""
    rng = np.random.default_rng(seed)
    k_eff = min(k, len(members) - 1)
    bases = rng.integers(0, len(members), size=n_new)
    picks = rng.integers(0, k_eff, size=n_new)
    gaps = rng.random(n_new)

    unique_bases, inverse = np.unique(bases, return_inverse=True)
    neighbors = nearest_neighbors(members, unique_bases, k_eff)
    partners = neighbors[inverse, picks]
    return members[bases] + gaps[:, None] * (members[partners] - members[bases])


def smote(ds, params, n_jobs=1):
    """Append SMOTE rows so that every targeted class reaches its target count.

    Original rows are kept verbatim and first; synthetic rows follow grouped by
    class and carry SYNTHETIC_TAG. Class c draws from seed + c, so running the
    classes in parallel gives the serial result.
    """
    if len(params.per_class_target) != ds.n_classes:
        raise DataError(f"{len(params.per_class_target)} SMOTE targets for {ds.n_classes} classes")
    counts = ds.class_counts()

    jobs = []
    for c, target in enumerate(params.per_class_target):
        if target == 0 or target == counts[c]:
            continue
        name = ds.class_names[c]
        if target < counts[c]:
            raise DataError(f"SMOTE target {target} for '{name}' is below its count {counts[c]}")
        if counts[c] < 2:
            raise DataError(
                f"class '{name}' has {counts[c]} sample(s); SMOTE needs at least 2 to interpolate"
            )
        members = ds.features[ds.labels == c]
        jobs.append((c, members, int(target - counts[c])))

    if not jobs:
        return ds

    blocks = Parallel(n_jobs=n_jobs)(
        delayed(_smote_class)(members, n_new, params.k, params.seed + c)
        for c, members, n_new in jobs
    )
    new_labels = np.concatenate([np.full(n_new, c, dtype=np.int64) for c, _, n_new in jobs])
    synthetic = FeatureDataset(
        np.vstack(blocks), new_labels, ds.class_names, np.full(len(new_labels), SYNTHETIC_TAG)
    )
    logger.info("SMOTE added %s synthetic rows across %s classes", len(new_labels), len(jobs))
    return concat_datasets(ds, synthetic)


def undersample(ds, cap, seed):
    """Keep at most cap rows per class, chosen uniformly without replacement"""
    if cap < 1:
        raise ValueError(f"undersampling cap must be >= 1, got {cap}")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size > cap:
            members = rng.choice(members, size=cap, replace=False)
        keep.append(members)
    return ds.subset(np.sort(np.concatenate(keep)))


def _raise_to(counts, level):
    return tuple(int(level) if count < level else 0 for count in counts)


def build_variant(original, extra_sources, spec, n_jobs=1):
    """Build one of the six training-set variants from the original (and extra) rows"""
    if spec.kind in NEEDS_EXTRAS and extra_sources is None:
        raise DataError(f"variant '{spec.kind}' needs the extra sources")
    if extra_sources is not None and extra_sources.n_features != original.n_features:
        raise DataError(
            f"feature dimension mismatch: original {original.n_features}, "
            f"extra {extra_sources.n_features}"
        )

    if spec.kind == "original":
        return original
    if spec.kind == "smote":
        counts = original.class_counts()
        params = SmoteParams(_raise_to(counts, counts.max()), spec.smote_k, spec.seed)
        return smote(original, params, n_jobs)

    combined = concat_datasets(original, extra_sources)
    counts = combined.class_counts()
    if spec.kind == "combined":
        return combined
    if spec.kind == "smote_combined":
        params = SmoteParams(_raise_to(counts, counts.max()), spec.smote_k, spec.seed)
        return smote(combined, params, n_jobs)
    if spec.kind == "smote_partial":
        threshold = spec.partial_theta * counts.max()
        level = math.ceil(round(threshold, 9))
        targets = tuple(level if count < threshold else 0 for count in counts)
        return smote(combined, SmoteParams(targets, spec.smote_k, spec.seed), n_jobs)

    # balanced
    params = SmoteParams(_raise_to(counts, spec.balanced_target), spec.smote_k, spec.seed)
    return undersample(smote(combined, params, n_jobs), spec.balanced_target, spec.seed)


def variant_manifest(before, after, spec):
    """JSON-ready record of a variant build: parameters and per-class counts"""
    before_counts = class_distribution(before).counts
    after_counts = class_distribution(after).counts
    return {
        "kind": spec.kind,
        "parameters": spec.to_dict(),
        "classes": [
            {"name": name, "before": before_counts[c], "after": after_counts[c]}
            for c, name in enumerate(after.class_names)
        ],
        "rows_before": int(sum(before_counts)),
        "rows_after": int(sum(after_counts)),
        "synthetic_rows": int(np.sum(after.source_tags == SYNTHETIC_TAG)),
    }
