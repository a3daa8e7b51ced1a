import io
import logging
from dataclasses import dataclass

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from .data import SYNTHETIC_TAG
from .errors import DataError
from .fileio import atomic_write_bytes, atomic_write_text
from .tree import check_dimension

logger = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000

# One color per class index, reused cyclically past 16 classes
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
)


@dataclass(frozen=True, eq=False)
class Pca2:
    mean: np.ndarray
    components: np.ndarray  # 2 x D, unit rows
    explained_variance: np.ndarray  # (lambda1, lambda2), descending

    @property
    def n_features(self):
        return self.mean.shape[0]

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }


def _orthogonalize(v, basis):
    for b in basis:
        v = v - (b @ v) * b
    return v


def power_iteration(A, against=(), tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Dominant eigenpair of symmetric PSD A restricted to the complement of `against`.

    Starts from the normalized all-ones vector (then unit vectors if that one
    has no component along A). A restricted matrix that is numerically zero
    yields eigenvalue 0 with the first usable start vector.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    scale = max(float(np.trace(A)), np.finfo(float).tiny)
    starts = [np.ones(n)] + [np.eye(n)[i] for i in range(n)]

    fallback = None
    v = None
    for start in starts:
        candidate = _orthogonalize(start, against)
        norm = np.linalg.norm(candidate)
        if norm < 1e-12:
            continue
        candidate = candidate / norm
        if fallback is None:
            fallback = candidate
        if np.linalg.norm(_orthogonalize(A @ candidate, against)) > 1e-12 * scale:
            v = candidate
            break
    if v is None:
        return 0.0, fallback

    for _ in range(max_iter):
        w = _orthogonalize(A @ v, against)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        w = w / norm
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    return float(v @ A @ v), v


def _sign_fix(v):
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def top2_eigenpairs(cov):
    """Top two eigenpairs of a covariance matrix by deflated power iteration"""
    cov = np.asarray(cov, dtype=np.float64)
    lam1, v1 = power_iteration(cov)
    v1 = _sign_fix(v1)
    deflated = cov - lam1 * np.outer(v1, v1)
    lam2, v2 = power_iteration(deflated, against=(v1,))
    v2 = _sign_fix(v2)
    values = np.array([lam1, max(lam2, 0.0)])
    return values, np.vstack([v1, v2])


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Full eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and eigenvectors as columns.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    limit = tol * max(1.0, np.linalg.norm(A))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A ** 2) - np.sum(np.diag(A) ** 2))
        if off < limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = 1.0 if theta == 0 else np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1.0))
                c = 1.0 / np.sqrt(t ** 2 + 1.0)
                s = t * c
                rotation = np.eye(n)
                rotation[p, p] = rotation[q, q] = c
                rotation[p, q] = s
                rotation[q, p] = -s
                A = rotation.T @ A @ rotation
                V = V @ rotation
    values = np.diag(A)
    order = np.argsort(-values, kind="stable")
    return values[order], V[:, order]


def pca2_fit(ds):
    """Two-component PCA of ds.features (covariance divisor N - 1)"""
    if ds.n_samples < 3 or ds.n_features < 2:
        raise DataError(f"PCA needs N >= 3 and D >= 2, got N={ds.n_samples} D={ds.n_features}")
    X = ds.features
    if np.ptp(X, axis=0).max() == 0.0:
        raise DataError("PCA is undefined: all rows are identical")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (ds.n_samples - 1)
    values, vectors = top2_eigenpairs(cov)
    logger.info("PCA explained variance: %.6g, %.6g", values[0], values[1])
    for array in (mean, vectors, values):
        array.setflags(write=False)
    return Pca2(mean, vectors, values)


def pca2_project(model, ds):
    """(x - mean) . components^T for every row; N x 2"""
    X, _ = check_dimension(ds.features, model.n_features)
    return (X - model.mean) @ model.components.T


def projection_frame(model, ds):
    coords = pca2_project(model, ds)
    return pd.DataFrame({
        "pc1": coords[:, 0],
        "pc2": coords[:, 1],
        "label": [ds.class_names[c] for c in ds.labels],
        "is_synthetic": ds.source_tags == SYNTHETIC_TAG,
    })


def write_scatter_csv(frame, path):
    return atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))


def write_scatter_svg(frame, class_names, path, title="PCA projection"):
    """Static scatter, one palette color per class index; synthetic rows drawn as crosses"""
    fig = Figure(figsize=(7, 6))
    ax = fig.add_subplot()
    for c, name in enumerate(class_names):
        rows = frame[frame["label"] == name]
        if rows.empty:
            continue
        color = PALETTE[c % len(PALETTE)]
        real = rows[~rows["is_synthetic"]]
        synthetic = rows[rows["is_synthetic"]]
        ax.scatter(real["pc1"], real["pc2"], s=6, color=color, label=name)
        if not synthetic.empty:
            ax.scatter(synthetic["pc1"], synthetic["pc2"], s=6, color=color, marker="x", alpha=0.4)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    ax.set_title(title)
    ax.legend(fontsize="x-small", markerscale=2, loc="best")

    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "pca-scatter"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return atomic_write_bytes(path, buffer.getvalue())
