"""Correlation-matrix PCA: Jacobi eigendecomposition, eigenvalue-one component
selection, loadings export and projection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import KIND_NUMERIC, TRANSFORM_NONE, ColumnMeta, FeatureMatrix

KAISER_THRESHOLD = 1.0
JACOBI_TOL_PER_DIM = 1e-11
JACOBI_MAX_SWEEPS = 100


def jacobi_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Iterates full sweeps until the off-diagonal Frobenius norm drops below
    1e-11 * d. Returns (eigenvalues, eigenvectors-as-columns), unsorted.
    """
    a = np.array(a, dtype=np.float64)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError("jacobi_eigh needs a square matrix")
    if not np.allclose(a, a.T, atol=1e-8):
        raise ValueError("jacobi_eigh needs a symmetric matrix")
    a = (a + a.T) / 2.0
    v = np.eye(d)
    if d == 1:
        return np.array([a[0, 0]]), v
    tol = JACOBI_TOL_PER_DIM * d
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off < tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    else:
        raise RuntimeError("Jacobi eigendecomposition failed to converge")
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class PcaModel:
    """Fitted principal components over the standardized numeric columns."""

    loadings: np.ndarray  # (d, d), columns are eigenvectors, eigenvalue-descending
    eigenvalues: np.ndarray  # (d,), descending, clamped at 0
    explained_ratio: np.ndarray  # (d,), sums to 1
    n_selected: int  # eigenvalue >= 1 count, minimum 1
    feature_names: tuple[str, ...]
    rank_deficient: bool = False

    @property
    def d(self) -> int:
        return len(self.feature_names)


def fit_pca(matrix: FeatureMatrix, kaiser_threshold: float = KAISER_THRESHOLD) -> PcaModel:
    """Eigendecompose the (n-1)-divisor covariance of standardized numeric data.

    Eigenvectors are flipped so each one's largest-magnitude entry is
    positive; components with eigenvalue >= the threshold (default 1, ties
    included) are selected, with a floor of one component.
    """
    x = matrix.values
    if not np.all(np.isfinite(x)):
        raise ValueError("PCA input contains non-finite values")
    n, d = x.shape
    if d < 2:
        raise ValueError(f"PCA needs at least 2 columns, got {d}")
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)

    eigenvalues, vectors = jacobi_eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    if eigenvalues[-1] < -1e-10:
        raise ValueError(f"covariance produced eigenvalue {eigenvalues[-1]}, below -1e-10")
    eigenvalues = np.maximum(eigenvalues, 0.0)

    for j in range(d):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]

    total = eigenvalues.sum()
    explained = eigenvalues / total if total > 0 else np.full(d, 1.0 / d)
    n_selected = max(1, int(np.sum(eigenvalues >= kaiser_threshold)))
    return PcaModel(
        loadings=vectors,
        eigenvalues=eigenvalues,
        explained_ratio=explained,
        n_selected=n_selected,
        feature_names=tuple(matrix.column_names()),
        rank_deficient=n < d,
    )


def project(matrix: FeatureMatrix, model: PcaModel, k: int | None = None) -> FeatureMatrix:
    """Score the data on the first k components (default: the selected count)."""
    if k is None:
        k = model.n_selected
    if not 1 <= k <= model.d:
        raise ValueError(f"component count k={k} outside 1..{model.d}")
    names = tuple(matrix.column_names())
    if names != model.feature_names:
        extra = sorted(set(names) - set(model.feature_names))
        missing = sorted(set(model.feature_names) - set(names))
        raise ValueError(
            f"column schema mismatch: unexpected {extra or '[]'}, missing {missing or '[]'}"
        )
    scores = matrix.values @ model.loadings[:, :k]
    cols = tuple(
        ColumnMeta(name=f"PC{j}", kind=KIND_NUMERIC, transform=TRANSFORM_NONE) for j in range(k)
    )
    return FeatureMatrix(values=scores, columns=cols, row_ids=matrix.row_ids)


def reconstruct(scores: FeatureMatrix, model: PcaModel) -> np.ndarray:
    """Back-project scores into the standardized feature space."""
    k = scores.d
    return scores.values @ model.loadings[:, :k].T


def loadings_table(model: PcaModel) -> list[list[str]]:
    """Feature x selected-component loadings, as CSV-ready rows."""
    header = ["feature"] + [f"PC{j}" for j in range(model.n_selected)]
    rows = [header]
    for i, name in enumerate(model.feature_names):
        rows.append([name] + [repr(float(model.loadings[i, j])) for j in range(model.n_selected)])
    return rows


def variance_table(model: PcaModel) -> list[list[str]]:
    """Component, eigenvalue, explained ratio, cumulative ratio rows."""
    rows = [["component", "eigenvalue", "explained_ratio", "cumulative"]]
    cum = 0.0
    for j in range(model.d):
        cum += float(model.explained_ratio[j])
        rows.append(
            [
                f"PC{j}",
                repr(float(model.eigenvalues[j])),
                repr(float(model.explained_ratio[j])),
                repr(cum),
            ]
        )
    return rows


def write_csv(rows: list[list[str]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
