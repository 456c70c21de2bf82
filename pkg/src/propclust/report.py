"""Render the delimited pipeline artifacts as matplotlib figures.

Every renderer reads one of the CSV outputs and writes a PNG next to it;
artifacts that are missing are skipped, so the report can be produced for a
partial run.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .profiles import read_series_csv

log = logging.getLogger(__name__)

FIGSIZE = (7.0, 4.5)


def _read_csv(path: Path) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_elbow(out_dir: Path) -> Path | None:
    src = out_dir / "elbow.csv"
    if not src.exists():
        return None
    rows = _read_csv(src)
    ks = [int(r["k"]) for r in rows]
    costs = [float(r["cost"]) for r in rows]
    selected = [int(r["k"]) for r in rows if r["selected"] == "1"]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(ks, costs, marker="o", color="tab:blue")
    for k in selected:
        ax.axvline(k, color="tab:red", linestyle="--", label=f"selected k={k}")
    ax.set_xlabel("k")
    ax.set_ylabel("cost")
    ax.set_title("Elbow sweep")
    if selected:
        ax.legend()
    dest = out_dir / "elbow.png"
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    plt.close(fig)
    return dest


def render_pca_variance(out_dir: Path) -> Path | None:
    src = out_dir / "pca_variance.csv"
    if not src.exists():
        return None
    rows = _read_csv(src)
    eigenvalues = [float(r["eigenvalue"]) for r in rows]
    cumulative = [float(r["cumulative"]) for r in rows]
    idx = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.bar(idx, eigenvalues, color="tab:blue", label="eigenvalue")
    ax.axhline(1.0, color="tab:red", linestyle="--", label="selection threshold")
    ax.set_xlabel("component")
    ax.set_ylabel("eigenvalue")
    ax2 = ax.twinx()
    ax2.plot(idx, cumulative, color="tab:green", marker=".", label="cumulative ratio")
    ax2.set_ylabel("cumulative explained ratio")
    ax2.set_ylim(0, 1.05)
    ax.set_title("Explained variance by component")
    ax.legend(loc="upper right")
    dest = out_dir / "pca_variance.png"
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    plt.close(fig)
    return dest


def render_urban_rural(out_dir: Path) -> Path | None:
    src = out_dir / "urban_rural.csv"
    if not src.exists():
        return None
    rows = _read_csv(src)
    clusters = [r["cluster"] for r in rows]
    urban = np.array([int(r["urban"]) for r in rows])
    rural = np.array([int(r["rural"]) for r in rows])
    x = np.arange(len(clusters))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.bar(x - 0.2, urban, width=0.4, label="urban", color="tab:blue")
    ax.bar(x + 0.2, rural, width=0.4, label="rural", color="tab:green")
    ax.set_xticks(x, [f"group {c}" for c in clusters])
    ax.set_ylabel("properties")
    ax.set_title("Property distribution within groups")
    ax.legend()
    dest = out_dir / "urban_rural.png"
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    plt.close(fig)
    return dest


def _render_series(src: Path, dest: Path, ylabel: str, title: str) -> Path | None:
    if not src.exists():
        return None
    rows = read_series_csv(src)
    months = [r["month"] for r in rows]
    x = np.arange(len(months))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for split, color in (("urban", "tab:blue"), ("rural", "tab:green")):
        ys = np.array([np.nan if r[split] is None else r[split] for r in rows], dtype=float)
        ax.plot(x, ys, marker=".", label=split, color=color)
    step = max(1, len(months) // 9)
    ax.set_xticks(x[::step], months[::step], rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    plt.close(fig)
    return dest


def render_revenue_series(out_dir: Path) -> Path | None:
    return _render_series(
        out_dir / "series_revenue.csv",
        out_dir / "series_revenue.png",
        "mean annual revenue (GBP)",
        "Revenue of active properties by month",
    )


def render_occupancy_series(out_dir: Path) -> Path | None:
    return _render_series(
        out_dir / "series_occupancy.csv",
        out_dir / "series_occupancy.png",
        "mean occupancy rate",
        "Occupancy of active properties by month",
    )


def render_cluster_points(out_dir: Path) -> Path | None:
    src = out_dir / "cluster_points.csv"
    if not src.exists():
        return None
    rows = _read_csv(src)
    if not rows:
        return None
    lats = np.array([float(r["latitude"]) for r in rows])
    lons = np.array([float(r["longitude"]) for r in rows])
    labels = np.array([int(r["cluster"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    cmap = plt.get_cmap("tab10")
    for g in np.unique(labels):
        mask = labels == g
        ax.scatter(lons[mask], lats[mask], s=6, color=cmap(int(g) % 10), label=f"group {g}")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title("Cluster-labelled property locations")
    ax.legend(markerscale=2)
    dest = out_dir / "cluster_points.png"
    fig.tight_layout()
    fig.savefig(dest, dpi=120)
    plt.close(fig)
    return dest


def render_all(out_dir: Path) -> list[Path]:
    """Render every figure whose source artifact exists; return written paths."""
    out_dir = Path(out_dir)
    written = []
    for renderer in (
        render_elbow,
        render_pca_variance,
        render_urban_rural,
        render_revenue_series,
        render_occupancy_series,
        render_cluster_points,
    ):
        dest = renderer(out_dir)
        if dest is not None:
            written.append(dest)
            log.info("wrote %s", dest)
    return written
