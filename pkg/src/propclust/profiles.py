"""Interpretable outputs for a chosen clustering: per-cluster feature
summaries, urban/rural splits, monthly descriptive series, and labelled
coordinates."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .records import (
    NUMERIC_FIELDS,
    STUDY_WINDOW_END,
    STUDY_WINDOW_START,
    PropertyRecord,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureSummary:
    mean: float
    median: float
    std: float


@dataclass(frozen=True)
class ClusterProfile:
    """Original-unit summary of one cluster plus its most distinguishing
    features by absolute standardized mean difference."""

    cluster: int
    size: int
    features: dict[str, FeatureSummary]
    urban_share: float
    top_features: list[tuple[str, float]]

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "size": self.size,
            "urban_share": self.urban_share,
            "features": {
                name: {"mean": s.mean, "median": s.median, "std": s.std}
                for name, s in sorted(self.features.items())
            },
            "top_features": [[name, score] for name, score in self.top_features],
        }


def _numeric_table(records: list[PropertyRecord]) -> np.ndarray:
    """(n, 24) raw numeric values, NaN for absent ratings."""
    out = np.empty((len(records), len(NUMERIC_FIELDS)), dtype=np.float64)
    for j, name in enumerate(NUMERIC_FIELDS):
        out[:, j] = [
            np.nan if getattr(r, name) is None else float(getattr(r, name)) for r in records
        ]
    return out


def profile_clusters(
    records: list[PropertyRecord], labels: np.ndarray, top_n: int = 8
) -> list[ClusterProfile]:
    """Summarize each cluster in original units and rank the features whose
    standardized cluster mean sits farthest from the overall mean."""
    labels = np.asarray(labels)
    if labels.size != len(records):
        raise ValueError("labels length differs from record count")
    table = _numeric_table(records)
    overall_mean = np.nanmean(table, axis=0)
    overall_std = np.nanstd(table, axis=0, ddof=1)
    urban = np.array([r.urban_rural == "urban" for r in records])

    profiles: list[ClusterProfile] = []
    for g in range(int(labels.max()) + 1):
        idx = np.flatnonzero(labels == g)
        if idx.size == 0:
            log.warning("cluster %d is empty; skipped", g)
            continue
        sub = table[idx]
        features = {}
        diffs = []
        for j, name in enumerate(NUMERIC_FIELDS):
            col = sub[:, j]
            obs = col[np.isfinite(col)]
            if obs.size == 0:
                features[name] = FeatureSummary(mean=float("nan"), median=float("nan"), std=float("nan"))
                diffs.append((name, 0.0))
                continue
            features[name] = FeatureSummary(
                mean=float(obs.mean()),
                median=float(np.median(obs)),
                std=float(obs.std(ddof=1)) if obs.size > 1 else 0.0,
            )
            if overall_std[j] > 0 and np.isfinite(overall_std[j]):
                diffs.append((name, float(abs(obs.mean() - overall_mean[j]) / overall_std[j])))
            else:
                diffs.append((name, 0.0))
        diffs.sort(key=lambda t: (-t[1], t[0]))
        profiles.append(
            ClusterProfile(
                cluster=int(g),
                size=int(idx.size),
                features=features,
                urban_share=float(urban[idx].mean()),
                top_features=diffs[:top_n],
            )
        )
    return profiles


def write_profiles_json(profiles: list[ClusterProfile], path: Path) -> None:
    payload = {"clusters": [p.to_dict() for p in profiles]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def urban_rural_distribution(
    records: list[PropertyRecord], labels: np.ndarray
) -> list[tuple[int, int, int]]:
    """(cluster, urban count, rural count) per cluster."""
    labels = np.asarray(labels)
    if labels.size != len(records):
        raise ValueError("labels length differs from record count")
    rows = []
    urban = np.array([r.urban_rural == "urban" for r in records])
    for g in np.unique(labels):
        idx = labels == g
        rows.append((int(g), int(np.sum(urban & idx)), int(np.sum(~urban & idx))))
    return rows


def write_urban_rural_csv(rows: list[tuple[int, int, int]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "urban", "rural"])
        for cluster, u, r in rows:
            writer.writerow([str(cluster), str(u), str(r)])


def _months_in_window(start: date, end: date) -> list[str]:
    months = []
    y, m = start.year, start.month
    while (y, m) <= (end.year, end.month):
        months.append(f"{y:04d}-{m:02d}")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return months


def _month_bounds(key: str) -> tuple[date, date]:
    y, m = int(key[:4]), int(key[5:])
    first = date(y, m, 1)
    last = date(y + 1, 1, 1) if m == 12 else date(y, m + 1, 1)
    return first, last


def descriptive_series(
    records: list[PropertyRecord],
    window_start: date = STUDY_WINDOW_START,
    window_end: date = STUDY_WINDOW_END,
) -> tuple[list[dict], list[dict]]:
    """Monthly mean revenue and mean occupancy of active records, split by
    urban/rural. Months with no active records in a split are emitted as
    absent (None), never zero.

    Returns (revenue rows, occupancy rows); each row is
    {month, urban, rural} with None for absent cells.
    """
    if not records:
        return [], []
    revenue_rows: list[dict] = []
    occupancy_rows: list[dict] = []
    for month in _months_in_window(window_start, window_end):
        first, next_first = _month_bounds(month)
        rev = {"urban": [], "rural": []}
        occ = {"urban": [], "rural": []}
        for rec in records:
            if rec.first_active < next_first and rec.last_active >= first:
                split = rec.urban_rural if rec.urban_rural in ("urban", "rural") else None
                if split is None:
                    continue
                rev[split].append(rec.annual_revenue)
                occ[split].append(rec.occupancy_rate)
        revenue_rows.append(
            {
                "month": month,
                "urban": float(np.mean(rev["urban"])) if rev["urban"] else None,
                "rural": float(np.mean(rev["rural"])) if rev["rural"] else None,
            }
        )
        occupancy_rows.append(
            {
                "month": month,
                "urban": float(np.mean(occ["urban"])) if occ["urban"] else None,
                "rural": float(np.mean(occ["rural"])) if occ["rural"] else None,
            }
        )
    return revenue_rows, occupancy_rows


def write_series_csv(
    rows: list[dict],
    path: Path,
    window_start: date = STUDY_WINDOW_START,
    window_end: date = STUDY_WINDOW_END,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# window_start={window_start.isoformat()} window_end={window_end.isoformat()}\n")
        writer = csv.writer(fh)
        writer.writerow(["month", "urban", "rural"])
        for row in rows:
            writer.writerow(
                [
                    row["month"],
                    "" if row["urban"] is None else repr(row["urban"]),
                    "" if row["rural"] is None else repr(row["rural"]),
                ]
            )


def read_series_csv(path: Path) -> list[dict]:
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append(
            {
                "month": row["month"],
                "urban": float(row["urban"]) if row["urban"] else None,
                "rural": float(row["rural"]) if row["rural"] else None,
            }
        )
    return rows


def export_cluster_points(
    records: list[PropertyRecord], labels: np.ndarray, path: Path
) -> int:
    """Write property_id, latitude, longitude, cluster rows; skip and count
    records without coordinates."""
    labels = np.asarray(labels)
    if labels.size != len(records):
        raise ValueError("labels length differs from record count")
    skipped = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["property_id", "latitude", "longitude", "cluster"])
        for rec, lab in zip(records, labels):
            if rec.latitude is None or rec.longitude is None:
                skipped += 1
                continue
            writer.writerow([rec.property_id, repr(rec.latitude), repr(rec.longitude), str(int(lab))])
    if skipped:
        log.warning("skipped %d records without coordinates", skipped)
    return skipped
