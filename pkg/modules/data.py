import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .fileio import atomic_write_bytes, atomic_write_text

logger = logging.getLogger(__name__)

SYNTHETIC_TAG = -1
BINARY_MAGIC = b"RBML1"
TAGS_MARKER = b"TAGS"

VEHICLE_CLASSES = (
    "Ambulance", "Barge", "Bicycle", "Boat", "Bus", "Car", "Cart", "Helicopter",
    "Limousine", "Motorcycle", "Segway", "Snowmobile", "Tank", "Taxi", "Truck", "Van",
)

# Images per class for source 1 (Kaggle), 2 (ImageNet) and 3 (web crawl)
SOURCE_TRAIN_COUNTS = {
    "Ambulance": (88, 1300, 0),
    "Barge": (160, 0, 270),
    "Bicycle": (1496, 1300, 0),
    "Boat": (7909, 0, 0),
    "Bus": (1782, 1300, 0),
    "Car": (5390, 0, 0),
    "Cart": (22, 2600, 0),
    "Helicopter": (517, 0, 232),
    "Limousine": (11, 1300, 0),
    "Motorcycle": (2189, 0, 0),
    "Segway": (88, 0, 232),
    "Snowmobile": (77, 1300, 0),
    "Tank": (121, 1300, 0),
    "Taxi": (527, 1300, 0),
    "Truck": (1474, 1300, 0),
    "Van": (715, 2459, 0),
}

SOURCE_TEST_COUNTS = {
    "Ambulance": (44, 50, 0),
    "Barge": (42, 0, 0),
    "Bicycle": (122, 50, 0),
    "Boat": (786, 0, 0),
    "Bus": (351, 50, 0),
    "Car": (1391, 0, 0),
    "Cart": (29, 100, 0),
    "Helicopter": (151, 0, 0),
    "Limousine": (63, 50, 0),
    "Motorcycle": (797, 0, 0),
    "Segway": (65, 0, 0),
    "Snowmobile": (46, 50, 0),
    "Tank": (85, 50, 0),
    "Taxi": (221, 50, 0),
    "Truck": (559, 50, 0),
    "Van": (396, 100, 0),
}


@dataclass(frozen=True, eq=False)
class FeatureDataset:
    """N labeled feature vectors with a class-name table and per-row source tags.

    Arrays are copied and frozen on construction, so a dataset can be shared
    freely between threads and workers.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple
    source_tags: np.ndarray = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DataError(f"features must be an N x D matrix, got shape {features.shape}")
        n_rows = features.shape[0]

        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != n_rows:
            raise DataError(f"{labels.shape[0]} labels for {n_rows} feature rows")

        class_names = tuple(str(name) for name in self.class_names)
        if len(set(class_names)) != len(class_names):
            raise DataError(f"class names must be unique: {class_names}")
        if n_rows and (labels.min() < 0 or labels.max() >= len(class_names)):
            raise DataError(f"labels must lie in [0, {len(class_names)})")
        if not np.all(np.isfinite(features)):
            raise DataError("all feature values must be finite")

        if self.source_tags is None:
            tags = np.zeros(n_rows, dtype=np.int64)
        else:
            tags = np.array(self.source_tags, dtype=np.int64).reshape(-1)
        if tags.shape[0] != n_rows:
            raise DataError(f"{tags.shape[0]} source tags for {n_rows} rows")

        for array in (features, labels, tags):
            array.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", class_names)
        object.__setattr__(self, "source_tags", tags)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureDataset(
            self.features[indices], self.labels[indices], self.class_names, self.source_tags[indices]
        )


@dataclass(frozen=True)
class ClassDistribution:
    counts: tuple

    @property
    def total(self):
        return int(sum(self.counts))

    def as_series(self, class_names):
        return pd.Series(self.counts, index=list(class_names), name="count")


@dataclass(frozen=True)
class SplitPair:
    train: FeatureDataset
    val: FeatureDataset


def class_distribution(ds):
    return ClassDistribution(tuple(int(c) for c in ds.class_counts()))


def fingerprint(ds):
    """Short content hash of labels and features, stored as model provenance"""
    digest = hashlib.sha256()
    digest.update(ds.labels.astype("<i8").tobytes())
    digest.update(ds.features.astype("<f8").tobytes())
    return digest.hexdigest()[:16]


def align_classes(ds, class_names):
    """Re-index labels against a wider (or reordered) class-name table"""
    class_names = tuple(class_names)
    if ds.class_names == class_names:
        return ds
    lookup = {name: index for index, name in enumerate(class_names)}
    missing = [name for name in ds.class_names if name not in lookup]
    if missing:
        raise DataError(f"classes {missing} are not in the class table")
    remap = np.array([lookup[name] for name in ds.class_names], dtype=np.int64)
    return FeatureDataset(ds.features, remap[ds.labels], class_names, ds.source_tags)


def concat_datasets(*datasets):
    """Row union of datasets sharing class names and feature dimension"""
    if not datasets:
        raise DataError("nothing to concatenate")
    first = datasets[0]
    for other in datasets[1:]:
        if other.class_names != first.class_names:
            raise DataError("cannot combine datasets with different class names")
        if other.n_features != first.n_features:
            raise DataError(
                f"feature dimension mismatch: {first.n_features} vs {other.n_features}"
            )
    return FeatureDataset(
        np.vstack([ds.features for ds in datasets]),
        np.concatenate([ds.labels for ds in datasets]),
        first.class_names,
        np.concatenate([ds.source_tags for ds in datasets]),
    )


# File formats

def infer_format(path):
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def read_label_map(path):
    """One class name per line; blank lines are ignored"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")
    names = [line.strip() for line in text.splitlines()]
    names = tuple(name for name in names if name)
    if not names:
        raise DataError(f"{path}: label map is empty")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: label map repeats a class name")
    return names


def _index_labels(raw_labels, label_map, path):
    if label_map is None:
        class_names = tuple(pd.unique(pd.Series(raw_labels, dtype=str)))
    else:
        class_names = tuple(label_map)
    lookup = {name: index for index, name in enumerate(class_names)}
    unknown = sorted(set(raw_labels) - set(lookup))
    if unknown:
        raise DataError(f"{path}: labels not in the label map: {unknown[:5]}")
    return np.array([lookup[name] for name in raw_labels], dtype=np.int64), class_names


def _read_csv(path, label_map):
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file")
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: ragged rows ({exc})")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")

    columns = [str(col).strip() for col in frame.columns]
    frame.columns = columns
    if not columns or columns[0] != "label":
        raise DataError(f"{path}: header must start with 'label'")
    if frame.empty:
        raise DataError(f"{path}: no data rows")

    has_source = len(columns) > 2 and columns[-1] == "source"
    feature_columns = columns[1:-1] if has_source else columns[1:]
    if not feature_columns:
        raise DataError(f"{path}: no feature columns")

    raw = frame[columns[1:]]
    missing = raw.isna() | (raw == "")
    if missing.to_numpy().any():
        row = int(np.flatnonzero(missing.to_numpy().any(axis=1))[0])
        raise DataError(f"{path}: ragged row {row + 2} (missing fields)")

    try:
        values = frame[feature_columns].apply(pd.to_numeric).to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: non-numeric feature field ({exc})")

    tags = None
    if has_source:
        try:
            tags = pd.to_numeric(frame["source"]).to_numpy(dtype=np.int64)
        except (ValueError, TypeError) as exc:
            raise DataError(f"{path}: non-integer source tag ({exc})")

    raw_labels = [label.strip() for label in frame["label"]]
    labels, class_names = _index_labels(raw_labels, label_map, path)
    return FeatureDataset(values, labels, class_names, tags)


def _read_binary(path, label_map):
    blob = Path(path).read_bytes()
    if not blob:
        raise DataError(f"{path}: empty file")
    if not blob.startswith(BINARY_MAGIC):
        raise DataError(f"{path}: bad magic, expected {BINARY_MAGIC!r}")

    def need(end):
        if end > len(blob):
            raise DataError(f"{path}: truncated file")

    offset = len(BINARY_MAGIC)
    need(offset + 24)
    n_rows, n_dims, n_names = (int(v) for v in np.frombuffer(blob, dtype="<u8", count=3, offset=offset))
    offset += 24

    names = []
    for _ in range(n_names):
        need(offset + 4)
        length = int(np.frombuffer(blob, dtype="<u4", count=1, offset=offset)[0])
        offset += 4
        need(offset + length)
        try:
            names.append(blob[offset:offset + length].decode("utf-8"))
        except UnicodeDecodeError:
            raise DataError(f"{path}: class name {len(names)} is not valid UTF-8")
        offset += length

    need(offset + 4 * n_rows)
    labels = np.frombuffer(blob, dtype="<u4", count=n_rows, offset=offset).astype(np.int64)
    offset += 4 * n_rows
    need(offset + 8 * n_rows * n_dims)
    features = np.frombuffer(blob, dtype="<f8", count=n_rows * n_dims, offset=offset)
    features = features.reshape(n_rows, n_dims)
    offset += 8 * n_rows * n_dims

    tags = None
    if offset < len(blob):
        if blob[offset:offset + len(TAGS_MARKER)] != TAGS_MARKER:
            raise DataError(f"{path}: unexpected trailing bytes")
        offset += len(TAGS_MARKER)
        need(offset + 4 * n_rows)
        tags = np.frombuffer(blob, dtype="<i4", count=n_rows, offset=offset).astype(np.int64)

    if n_rows == 0:
        raise DataError(f"{path}: no data rows")
    if labels.max() >= n_names:
        raise DataError(f"{path}: label index out of range for {n_names} classes")

    if label_map is not None:
        remapped, class_names = _index_labels([names[i] for i in labels], label_map, path)
        return FeatureDataset(features, remapped, class_names, tags)
    return FeatureDataset(features, labels, tuple(names), tags)


def load_features(path, fmt=None, label_map=None):
    """Read a feature file; fmt is 'csv' or 'binary' (inferred from the suffix when None)"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"feature file not found: {path}")
    fmt = fmt or infer_format(path)
    if fmt == "csv":
        ds = _read_csv(path, label_map)
    elif fmt == "binary":
        ds = _read_binary(path, label_map)
    else:
        raise ValueError(f"unknown feature format: {fmt}")
    logger.info("Loaded %s: N=%s D=%s K=%s", path, ds.n_samples, ds.n_features, ds.n_classes)
    return ds


def _binary_payload(ds):
    parts = [
        BINARY_MAGIC,
        np.array([ds.n_samples, ds.n_features, ds.n_classes], dtype="<u8").tobytes(),
    ]
    for name in ds.class_names:
        encoded = name.encode("utf-8")
        parts.append(np.array([len(encoded)], dtype="<u4").tobytes())
        parts.append(encoded)
    parts.append(ds.labels.astype("<u4").tobytes())
    parts.append(ds.features.astype("<f8").tobytes())
    if np.any(ds.source_tags != 0):
        parts.append(TAGS_MARKER)
        parts.append(ds.source_tags.astype("<i4").tobytes())
    return b"".join(parts)


def save_features(ds, path, fmt=None):
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt == "binary":
        return atomic_write_bytes(path, _binary_payload(ds))
    if fmt != "csv":
        raise ValueError(f"unknown feature format: {fmt}")

    frame = pd.DataFrame(ds.features, columns=[f"f{j}" for j in range(ds.n_features)])
    frame.insert(0, "label", [ds.class_names[i] for i in ds.labels])
    if np.any(ds.source_tags != 0):
        frame["source"] = ds.source_tags
    return atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))


# Splitting

def _round_half_up(value):
    return int(math.floor(value + 0.5))


def _stratified_train_counts(counts, fraction):
    counts = np.asarray(counts, dtype=np.int64)
    targets = np.zeros_like(counts)
    low = np.zeros_like(counts)
    high = np.zeros_like(counts)
    for c, count in enumerate(counts):
        if count == 0:
            continue
        low[c] = 1
        high[c] = count - 1 if count >= 2 else count
        targets[c] = min(max(_round_half_up(fraction * count), low[c]), high[c])

    # Correct total drift one row at a time, largest classes first
    drift = _round_half_up(fraction * counts.sum()) - int(targets.sum())
    order = sorted(range(len(counts)), key=lambda c: (-counts[c], c))
    while drift != 0:
        step = 1 if drift > 0 else -1
        moved = False
        for c in order:
            candidate = targets[c] + step
            if low[c] <= candidate <= high[c] and abs(candidate - fraction * counts[c]) <= 1.0:
                targets[c] = candidate
                drift -= step
                moved = True
                if drift == 0:
                    break
        if not moved:
            break
    return targets


def stratified_split(ds, train_fraction, seed, stratified=True):
    """Split into train/val keeping per-class proportions (uniform split when stratified=False)"""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if ds.n_samples == 0:
        raise DataError("cannot split an empty dataset")
    if not stratified:
        return uniform_split(ds, train_fraction, seed)

    rng = np.random.default_rng(seed)
    counts = ds.class_counts()
    targets = _stratified_train_counts(counts, train_fraction)
    train_parts = []
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        if members.size == 1:
            logger.warning(
                "Class %s has a single row; it goes to train and val has none of it",
                ds.class_names[c],
            )
        train_parts.append(rng.permutation(members)[: targets[c]])

    train_idx = np.sort(np.concatenate(train_parts))
    val_mask = np.ones(ds.n_samples, dtype=bool)
    val_mask[train_idx] = False
    return SplitPair(ds.subset(train_idx), ds.subset(np.flatnonzero(val_mask)))


def uniform_split(ds, train_fraction, seed):
    if ds.n_samples == 0:
        raise DataError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    n_train = _round_half_up(train_fraction * ds.n_samples)
    n_train = min(max(n_train, 1), max(ds.n_samples - 1, 1))
    perm = rng.permutation(ds.n_samples)
    return SplitPair(ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:])))


# Synthetic data

def synth_blobs(spec, seed, class_names=None):
    """Isotropic Gaussian blobs, one (center, stddev, count) entry per class"""
    if not spec:
        raise ValueError("at least one blob is required")
    rng = np.random.default_rng(seed)
    centers = [np.asarray(center, dtype=np.float64).reshape(-1) for center, _, _ in spec]
    n_dims = centers[0].shape[0]

    blocks, labels = [], []
    for c, ((_, stddev, count), center) in enumerate(zip(spec, centers)):
        if center.shape[0] != n_dims:
            raise ValueError("all blob centers must share one dimension")
        if count < 1:
            raise ValueError(f"blob {c}: count must be >= 1, got {count}")
        if stddev < 0:
            raise ValueError(f"blob {c}: stddev must be >= 0, got {stddev}")
        blocks.append(center + stddev * rng.standard_normal((count, n_dims)))
        labels.append(np.full(count, c, dtype=np.int64))

    if class_names is None:
        class_names = tuple(f"class_{c}" for c in range(len(spec)))
    return FeatureDataset(np.vstack(blocks), np.concatenate(labels), class_names)


def combined_counts(table=SOURCE_TRAIN_COUNTS, sources=(1, 2, 3)):
    """Per-class totals over the chosen sources (1-based)"""
    return {name: sum(row[s - 1] for s in sources) for name, row in table.items()}


def scale_counts(table, factor, minimum=5):
    """Count table divided by factor (round half up); non-zero cells keep at least `minimum` rows"""
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return {
        name: tuple(0 if n == 0 else max(minimum, _round_half_up(n / factor)) for n in row)
        for name, row in table.items()
    }


def corpus_dataset(table=SOURCE_TRAIN_COUNTS, sources=(1, 2, 3), n_features=8,
                   seed=0, spread=1.0, separation=3.0, stream=0):
    """Rows with exactly the per-class, per-source counts of a count table.

    Class centers depend only on seed, so train and test tables drawn with the
    same seed (and different streams) share one geometry. Rows carry their
    source number as source tag.
    """
    class_names = tuple(table)
    centers = np.random.default_rng(seed).normal(0.0, separation, size=(len(class_names), n_features))

    blocks, labels, tags = [], [], []
    for source in sources:
        rng = np.random.default_rng([seed, stream, source])
        for c, name in enumerate(class_names):
            count = table[name][source - 1]
            if count == 0:
                continue
            blocks.append(centers[c] + spread * rng.standard_normal((count, n_features)))
            labels.append(np.full(count, c, dtype=np.int64))
            tags.append(np.full(count, source, dtype=np.int64))

    if not blocks:
        return FeatureDataset(np.empty((0, n_features)), np.empty(0, dtype=np.int64), class_names)
    return FeatureDataset(np.vstack(blocks), np.concatenate(labels), class_names, np.concatenate(tags))
