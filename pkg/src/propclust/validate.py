"""Internal cluster-validity indices, cross-tabulation of competing
clusterings, chance-corrected agreement, and model selection."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Optional

import numpy as np

CHI_NOTE = "variance ratio criterion: (B/(k-1)) / (W/(n-k))"


def _groups(labels: np.ndarray) -> list[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == g) for g in np.unique(labels)]


def davies_bouldin(points: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    """Mean over clusters of the worst (s_i + s_j) / d_ij ratio.

    s_i is the mean Euclidean distance of cluster-i points to center i; d_ij
    the distance between centers. Pass centroids for k-means models and
    medoids for k-medoids models.
    """
    x = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    groups = _groups(labels)
    k = len(groups)
    if k < 2:
        raise ValueError(f"Davies-Bouldin needs at least 2 clusters, got {k}")
    if centers.shape[0] != k:
        raise ValueError(f"got {centers.shape[0]} centers for {k} clusters")
    scatter = np.array(
        [np.sqrt(((x[idx] - centers[i]) ** 2).sum(axis=1)).mean() for i, idx in enumerate(groups)]
    )
    sep = np.sqrt(((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
    total = 0.0
    for i in range(k):
        ratios = []
        for j in range(k):
            if i == j:
                continue
            if sep[i, j] == 0.0:
                raise ValueError(f"clusters {i} and {j} have coincident centers")
            ratios.append((scatter[i] + scatter[j]) / sep[i, j])
        total += max(ratios)
    return float(total / k)


def calinski_harabasz(
    points: np.ndarray,
    labels: np.ndarray,
    k: int,
    centers: Optional[np.ndarray] = None,
) -> float:
    """Between/within dispersion ratio, each normalized by degrees of freedom.

    Centers default to cluster centroids; pass medoids to score a k-medoids
    model against its own fitted representatives.
    """
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    groups = _groups(labels)
    if len(groups) != k:
        raise ValueError(f"labels contain {len(groups)} clusters, expected k={k}")
    if not 2 <= k <= n - 1:
        raise ValueError(f"k={k} outside [2, {n - 1}]")
    overall = x.mean(axis=0)
    if centers is None:
        centers = np.array([x[idx].mean(axis=0) for idx in groups])
    else:
        centers = np.asarray(centers, dtype=np.float64)
    between = 0.0
    within = 0.0
    for i, idx in enumerate(groups):
        between += idx.size * float(((centers[i] - overall) ** 2).sum())
        within += float(((x[idx] - centers[i]) ** 2).sum())
    if within == 0.0:
        raise ValueError("degenerate perfect clustering: zero within-cluster dispersion")
    return float((between / (k - 1)) / (within / (n - k)))


@dataclass(frozen=True)
class CrossTab:
    """Contingency counts of two labelings, with row/column/grand totals."""

    counts: np.ndarray  # (r, c) int64
    row_totals: np.ndarray
    col_totals: np.ndarray
    total: int

    def to_rows(self, row_name: str = "a", col_name: str = "b") -> list[list[str]]:
        r, c = self.counts.shape
        header = [f"{row_name}\\{col_name}"] + [str(j) for j in range(c)] + ["total"]
        rows = [header]
        for i in range(r):
            rows.append([str(i)] + [str(int(v)) for v in self.counts[i]] + [str(int(self.row_totals[i]))])
        rows.append(["total"] + [str(int(v)) for v in self.col_totals] + [str(self.total)])
        return rows


def crosstab(labels_a: np.ndarray, labels_b: np.ndarray) -> CrossTab:
    """Cell (i, j) counts points labeled i by the first clustering and j by
    the second; margins always reconcile to n."""
    a = np.asarray(labels_a, dtype=np.int64)
    b = np.asarray(labels_b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"label lengths differ: {a.size} vs {b.size}")
    r = int(a.max()) + 1 if a.size else 0
    c = int(b.max()) + 1 if b.size else 0
    counts = np.zeros((r, c), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    return CrossTab(
        counts=counts,
        row_totals=counts.sum(axis=1),
        col_totals=counts.sum(axis=0),
        total=int(counts.sum()),
    )


def adjusted_rand_index(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Chance-corrected agreement between two partitions, from the
    contingency table; 1 for identical partitions up to relabeling."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.size != b.size:
        raise ValueError("label lengths differ")
    n = a.size
    if n < 2:
        raise ValueError("adjusted Rand index needs at least 2 points")
    tab = crosstab(_dense(a), _dense(b))
    sum_cells = sum(comb(int(v), 2) for v in tab.counts.ravel())
    sum_rows = sum(comb(int(v), 2) for v in tab.row_totals)
    sum_cols = sum(comb(int(v), 2) for v in tab.col_totals)
    pairs = comb(n, 2)
    expected = sum_rows * sum_cols / pairs
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def _dense(labels: np.ndarray) -> np.ndarray:
    _, dense = np.unique(labels, return_inverse=True)
    return dense


@dataclass(frozen=True)
class ModelScore:
    tag: str
    dbi: float
    chi: float


@dataclass(frozen=True)
class SelectionResult:
    selected: str
    disagreement: bool = False
    tie: bool = False


def select_model(scores: list[ModelScore]) -> SelectionResult:
    """Pick the model that wins on both indices (lower DBI, higher CHI).

    When the indices disagree, CHI decides and the disagreement is flagged;
    exact ties keep the first model and are flagged as ties.
    """
    if len(scores) < 2:
        raise ValueError("model selection needs at least 2 scored models")
    best_dbi = min(scores, key=lambda s: s.dbi)
    best_chi = max(scores, key=lambda s: s.chi)
    if all(s.dbi == scores[0].dbi and s.chi == scores[0].chi for s in scores):
        return SelectionResult(selected=scores[0].tag, tie=True)
    if best_dbi.tag == best_chi.tag:
        return SelectionResult(selected=best_chi.tag)
    return SelectionResult(selected=best_chi.tag, disagreement=True)


@dataclass
class ValidationReport:
    """Scores per model, the cross-tabulation, and the adopted model."""

    per_model: list[ModelScore]
    crosstab: CrossTab
    selected: str
    ari_vs_truth: Optional[float] = None
    flags: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=lambda: {"chi": CHI_NOTE})

    def to_json(self) -> str:
        payload = {
            "notes": self.notes,
            "per_model": [
                {"tag": s.tag, "dbi": s.dbi, "chi": s.chi} for s in self.per_model
            ],
            "crosstab": {
                "counts": self.crosstab.counts.tolist(),
                "row_totals": self.crosstab.row_totals.tolist(),
                "col_totals": self.crosstab.col_totals.tolist(),
                "total": self.crosstab.total,
            },
            "ari_vs_truth": self.ari_vs_truth,
            "selected": self.selected,
            "flags": self.flags,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def write_crosstab_csv(tab: CrossTab, path: Path, row_name: str = "a", col_name: str = "b") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(tab.to_rows(row_name=row_name, col_name=col_name))
