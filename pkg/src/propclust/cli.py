"""Command-line front end chaining the pipeline stages with reproducible
seeds and file-based handoffs between stages."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .cluster import ClusterModel, clara, elbow_sweep, kmeans_best
from .ingest import (
    DateWindow,
    IngestError,
    IngestReport,
    SyntheticSpec,
    generate_synthetic,
    join_lsoa,
    load_lsoa_lookup,
    load_properties,
    read_truth_csv,
    write_properties_csv,
    write_truth_csv,
)
from .pca import PcaModel, fit_pca, loadings_table, project, variance_table, write_csv
from .preprocess import PreprocessPlan, apply_plan, build_raw_matrix, count_missing, fit_plan
from .profiles import (
    descriptive_series,
    export_cluster_points,
    profile_clusters,
    urban_rural_distribution,
    write_profiles_json,
    write_series_csv,
    write_urban_rural_csv,
)
from .records import (
    KIND_NUMERIC,
    KIND_ONEHOT,
    KIND_ORDINAL,
    STUDY_WINDOW_END,
    STUDY_WINDOW_START,
    ColumnMeta,
    FeatureMatrix,
)
from .report import render_all
from .validate import (
    ModelScore,
    ValidationReport,
    adjusted_rand_index,
    calinski_harabasz,
    crosstab,
    davies_bouldin,
    select_model,
    write_crosstab_csv,
)

log = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flags or config; maps to exit code 2."""


class PipelineError(Exception):
    """A stage failed at runtime; maps to exit code 1."""


@dataclass
class PipelineConfig:
    """Everything a run needs; built from a flat key=value file with
    command-line flags winning over file values."""

    out: Path = Path("out")
    seed: int = 0
    properties: Optional[Path] = None
    lsoa: Optional[Path] = None
    synthetic_n: Optional[int] = None
    synthetic_k: Optional[int] = None
    synthetic_sep: float = 6.0
    synthetic_urban_fraction: float = 0.7
    synthetic_rural_uplift: float = 0.0
    window_start: date = STUDY_WINDOW_START
    window_end: date = STUDY_WINDOW_END
    skew_threshold: float = 2.0
    kaiser_threshold: float = 1.0
    k_list: list[int] = field(default_factory=lambda: [2, 3, 4, 5, 6, 7, 8])
    kmeans_k: int = 4
    kmedoids_k: int = 6
    kmeans_restarts: int = 10
    clara_samples: int = 5
    clara_sample_size: Optional[int] = None
    elbow_algorithm: str = "kmeans"
    sensitivity: float = 1.0
    drop_duplicate_columns: bool = False
    plots: bool = False

    @property
    def synthetic_mode(self) -> bool:
        return self.synthetic_n is not None or self.synthetic_k is not None

    @property
    def window(self) -> DateWindow:
        return DateWindow(self.window_start, self.window_end)

    def validate(self) -> None:
        has_files = self.properties is not None or self.lsoa is not None
        if has_files and self.synthetic_mode:
            raise UsageError("give either input paths or a synthetic spec, not both")
        if not has_files and not self.synthetic_mode:
            raise UsageError("give input paths (properties, lsoa) or a synthetic spec")
        if has_files and (self.properties is None or self.lsoa is None):
            raise UsageError("real-data mode needs both properties and lsoa paths")
        if self.synthetic_mode and (self.synthetic_n is None or self.synthetic_k is None):
            raise UsageError("synthetic mode needs both n and k")
        if self.window_start > self.window_end:
            raise UsageError("window start is after window end")
        if self.k_list != sorted(set(self.k_list)):
            raise UsageError("k_list must be strictly ascending")

    def synthetic_spec(self) -> SyntheticSpec:
        try:
            return SyntheticSpec(
                n_points=self.synthetic_n,
                n_clusters=self.synthetic_k,
                separation=self.synthetic_sep,
                seed=self.seed,
                urban_fraction=self.synthetic_urban_fraction,
                rural_occupancy_uplift=self.synthetic_rural_uplift,
            )
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad synthetic spec: {exc}") from exc

    def echo(self) -> dict:
        return {
            "out": str(self.out),
            "seed": self.seed,
            "properties": str(self.properties) if self.properties else None,
            "lsoa": str(self.lsoa) if self.lsoa else None,
            "synthetic_n": self.synthetic_n,
            "synthetic_k": self.synthetic_k,
            "synthetic_sep": self.synthetic_sep,
            "synthetic_urban_fraction": self.synthetic_urban_fraction,
            "synthetic_rural_uplift": self.synthetic_rural_uplift,
            "window_start": self.window_start.isoformat(),
            "window_end": self.window_end.isoformat(),
            "skew_threshold": self.skew_threshold,
            "kaiser_threshold": self.kaiser_threshold,
            "k_list": self.k_list,
            "kmeans_k": self.kmeans_k,
            "kmedoids_k": self.kmedoids_k,
            "kmeans_restarts": self.kmeans_restarts,
            "clara_samples": self.clara_samples,
            "clara_sample_size": self.clara_sample_size,
            "elbow_algorithm": self.elbow_algorithm,
            "sensitivity": self.sensitivity,
            "drop_duplicate_columns": self.drop_duplicate_columns,
            "plots": self.plots,
        }


_BOOL_KEYS = {"drop_duplicate_columns", "plots"}
_INT_KEYS = {
    "seed",
    "synthetic_n",
    "synthetic_k",
    "kmeans_k",
    "kmedoids_k",
    "kmeans_restarts",
    "clara_samples",
    "clara_sample_size",
}
_FLOAT_KEYS = {
    "synthetic_sep",
    "synthetic_urban_fraction",
    "synthetic_rural_uplift",
    "skew_threshold",
    "kaiser_threshold",
    "sensitivity",
}
_DATE_KEYS = {"window_start", "window_end"}
_PATH_KEYS = {"out", "properties", "lsoa"}
_STR_KEYS = {"elbow_algorithm"}


def parse_config_file(path: Path) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        try:
            if key in _BOOL_KEYS:
                values[key] = raw.lower() in ("1", "true", "yes", "on")
            elif key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            elif key in _DATE_KEYS:
                values[key] = date.fromisoformat(raw)
            elif key in _PATH_KEYS:
                values[key] = Path(raw)
            elif key in _STR_KEYS:
                values[key] = raw
            elif key == "k_list":
                values[key] = [int(v) for v in raw.split(",") if v.strip()]
            else:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def build_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    # flags win over config-file values
    for key in (
        "seed",
        "out",
        "properties",
        "lsoa",
        "synthetic_n",
        "synthetic_k",
        "synthetic_sep",
        "synthetic_urban_fraction",
        "synthetic_rural_uplift",
        "window_start",
        "window_end",
        "k_list",
        "kmeans_k",
        "kmedoids_k",
        "elbow_algorithm",
        "sensitivity",
        "plots",
    ):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = PipelineConfig(**values)
    return cfg


# ---------------------------------------------------------------------------
# matrix file handoff

def write_matrix_csv(matrix: FeatureMatrix, path: Path, meta_path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["property_id"] + matrix.column_names())
        for rid, row in zip(matrix.row_ids, matrix.values):
            writer.writerow([rid] + [repr(float(v)) for v in row])
    meta = [c.to_dict() for c in matrix.columns]
    Path(meta_path).write_text(json.dumps(meta, indent=2), encoding="utf-8")


def read_matrix_csv(path: Path, meta_path: Path) -> FeatureMatrix:
    meta = [ColumnMeta.from_dict(d) for d in json.loads(Path(meta_path).read_text(encoding="utf-8"))]
    row_ids = []
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "property_id" or header[1:] != [c.name for c in meta]:
            raise PipelineError(f"{path}: header does not match {meta_path}")
        for row in reader:
            row_ids.append(row[0])
            rows.append([float(v) if v else np.nan for v in row[1:]])
    return FeatureMatrix(
        values=np.array(rows, dtype=np.float64),
        columns=tuple(meta),
        row_ids=tuple(row_ids),
    )


def write_labels_csv(row_ids: tuple[str, ...], labels: np.ndarray, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["property_id", "cluster"])
        for rid, lab in zip(row_ids, labels):
            writer.writerow([rid, str(int(lab))])


def read_labels_csv(path: Path) -> tuple[list[str], np.ndarray]:
    ids, labs = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["property_id"])
            labs.append(int(row["cluster"]))
    return ids, np.array(labs, dtype=np.int64)


def write_model_json(model: ClusterModel, path: Path) -> None:
    payload = {
        "algorithm": model.algorithm,
        "k": model.k,
        "inertia": model.inertia,
        "n_iter": model.n_iter,
        "seed": model.seed,
        "medoid_rows": list(model.medoid_rows) if model.medoid_rows is not None else None,
        "centers": model.centers.tolist(),
        "inertia_history": list(model.inertia_history),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def write_pca_json(model: PcaModel, path: Path) -> None:
    payload = {
        "feature_names": list(model.feature_names),
        "eigenvalues": model.eigenvalues.tolist(),
        "explained_ratio": model.explained_ratio.tolist(),
        "n_selected": model.n_selected,
        "rank_deficient": model.rank_deficient,
        "loadings": model.loadings.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


# ---------------------------------------------------------------------------
# pipeline stages (each writes its artifacts into cfg.out)

def stage_generate(cfg: PipelineConfig, name: str = "synthetic"):
    spec = cfg.synthetic_spec()
    records, labels = generate_synthetic(spec)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_properties_csv(records, cfg.out / f"{name}.csv")
    write_truth_csv(records, labels, cfg.out / f"{name}.truth.csv")
    return records, labels


def stage_ingest(cfg: PipelineConfig) -> tuple[list, IngestReport]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    if cfg.synthetic_mode:
        src = cfg.out / "synthetic.csv"
        if not src.exists():
            raise PipelineError(f"{src} not found; run `generate` first")
        records, report = load_properties(src, cfg.window)
    else:
        records, report = load_properties(cfg.properties, cfg.window)
        lookup = load_lsoa_lookup(cfg.lsoa)
        records, misses = join_lsoa(records, lookup)
        report.rows_dropped_join_miss = misses
        report.rows_kept -= misses
        report.check()
    if not records:
        raise PipelineError("ingest kept no records; nothing to cluster")
    write_properties_csv(records, cfg.out / "cleaned.csv")
    (cfg.out / "ingest_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    return records, report


def _load_cleaned(cfg: PipelineConfig) -> list:
    src = cfg.out / "cleaned.csv"
    if not src.exists():
        raise PipelineError(f"{src} not found; run `ingest` first")
    records, _ = load_properties(src, cfg.window)
    return records


def stage_preprocess(cfg: PipelineConfig, records=None) -> tuple[FeatureMatrix, PreprocessPlan, int]:
    if records is None:
        records = _load_cleaned(cfg)
    raw = build_raw_matrix(records)
    imputed = count_missing(raw)
    plan = fit_plan(raw, cfg.skew_threshold)
    encoded = apply_plan(raw, plan)
    plan.save(cfg.out / "plan.json")
    write_matrix_csv(encoded, cfg.out / "features.csv", cfg.out / "features_meta.json")
    return encoded, plan, imputed


def _load_features(cfg: PipelineConfig) -> FeatureMatrix:
    src = cfg.out / "features.csv"
    if not src.exists():
        raise PipelineError(f"{src} not found; run `preprocess` first")
    return read_matrix_csv(src, cfg.out / "features_meta.json")


def _drop_duplicate_columns(matrix: FeatureMatrix) -> tuple[FeatureMatrix, list[str]]:
    keep: list[int] = []
    dropped: list[str] = []
    seen: list[int] = []
    for j in range(matrix.d):
        dup = any(np.array_equal(matrix.values[:, j], matrix.values[:, i]) for i in seen)
        if dup:
            dropped.append(matrix.columns[j].name)
        else:
            keep.append(j)
            seen.append(j)
    if not dropped:
        return matrix, []
    return (
        FeatureMatrix(
            values=matrix.values[:, keep].copy(),
            columns=tuple(matrix.columns[j] for j in keep),
            row_ids=matrix.row_ids,
        ),
        dropped,
    )


def stage_pca(cfg: PipelineConfig, encoded: Optional[FeatureMatrix] = None):
    if encoded is None:
        encoded = _load_features(cfg)
    numeric = encoded.select_kinds((KIND_NUMERIC,))
    if cfg.drop_duplicate_columns:
        numeric, dropped = _drop_duplicate_columns(numeric)
        if dropped:
            log.info("dropped duplicate columns before PCA: %s", dropped)
    model = fit_pca(numeric, kaiser_threshold=cfg.kaiser_threshold)
    scores = project(numeric, model)
    categorical = encoded.select_kinds((KIND_ORDINAL, KIND_ONEHOT))
    space = scores.hstack(categorical) if categorical.d else scores
    write_csv(loadings_table(model), cfg.out / "pca_loadings.csv")
    write_csv(variance_table(model), cfg.out / "pca_variance.csv")
    write_pca_json(model, cfg.out / "pca_model.json")
    write_matrix_csv(space, cfg.out / "cluster_space.csv", cfg.out / "cluster_space_meta.json")
    return space, model


def _load_space(cfg: PipelineConfig) -> FeatureMatrix:
    src = cfg.out / "cluster_space.csv"
    if not src.exists():
        raise PipelineError(f"{src} not found; run `pca` first")
    return read_matrix_csv(src, cfg.out / "cluster_space_meta.json")


def stage_cluster(cfg: PipelineConfig, space: Optional[FeatureMatrix] = None):
    if space is None:
        space = _load_space(cfg)
    km = kmeans_best(space.values, cfg.kmeans_k, seed=cfg.seed, restarts=cfg.kmeans_restarts)
    cl = clara(
        space.values,
        cfg.kmedoids_k,
        seed=cfg.seed,
        n_samples=cfg.clara_samples,
        sample_size=cfg.clara_sample_size,
    )
    write_labels_csv(space.row_ids, km.labels, cfg.out / "labels_kmeans.csv")
    write_labels_csv(space.row_ids, cl.labels, cfg.out / "labels_kmedoids.csv")
    write_model_json(km, cfg.out / "model_kmeans.json")
    write_model_json(cl, cfg.out / "model_kmedoids.json")
    return km, cl


def _load_models(cfg: PipelineConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    needed = [
        cfg.out / "labels_kmeans.csv",
        cfg.out / "labels_kmedoids.csv",
        cfg.out / "model_kmeans.json",
        cfg.out / "model_kmedoids.json",
    ]
    for p in needed:
        if not p.exists():
            raise PipelineError(f"{p} not found; run `cluster` first")
    _, km_labels = read_labels_csv(needed[0])
    _, cl_labels = read_labels_csv(needed[1])
    km_centers = np.array(json.loads(needed[2].read_text())["centers"])
    cl_centers = np.array(json.loads(needed[3].read_text())["centers"])
    return km_labels, cl_labels, km_centers, cl_centers


def stage_validate(
    cfg: PipelineConfig,
    space: Optional[FeatureMatrix] = None,
    km: Optional[ClusterModel] = None,
    cl: Optional[ClusterModel] = None,
) -> ValidationReport:
    if space is None:
        space = _load_space(cfg)
    if km is not None and cl is not None:
        km_labels, cl_labels = km.labels, cl.labels
        km_centers, cl_centers = km.centers, cl.centers
    else:
        km_labels, cl_labels, km_centers, cl_centers = _load_models(cfg)

    x = space.values
    scores = [
        ModelScore(
            tag="kmeans",
            dbi=davies_bouldin(x, km_labels, km_centers),
            chi=calinski_harabasz(x, km_labels, int(km_centers.shape[0])),
        ),
        ModelScore(
            tag="kmedoids_clara",
            dbi=davies_bouldin(x, cl_labels, cl_centers),
            chi=calinski_harabasz(x, cl_labels, int(cl_centers.shape[0]), centers=cl_centers),
        ),
    ]
    tab = crosstab(km_labels, cl_labels)
    selection = select_model(scores)
    flags = []
    if selection.disagreement:
        flags.append("index_disagreement: DBI and CHI prefer different models; CHI decided")
    if selection.tie:
        flags.append("tie: identical scores; first model kept")

    selected_labels = km_labels if selection.selected == "kmeans" else cl_labels
    ari = None
    truth_path = cfg.out / "synthetic.truth.csv"
    if truth_path.exists():
        truth = read_truth_csv(truth_path)
        if all(rid in truth for rid in space.row_ids):
            true_labels = np.array([truth[rid] for rid in space.row_ids])
            ari = adjusted_rand_index(true_labels, selected_labels)

    report = ValidationReport(
        per_model=scores,
        crosstab=tab,
        selected=selection.selected,
        ari_vs_truth=ari,
        flags=flags,
    )
    report.save(cfg.out / "validation.json")
    write_crosstab_csv(tab, cfg.out / "crosstab.csv", row_name="kmeans", col_name="kmedoids")
    write_labels_csv(space.row_ids, selected_labels, cfg.out / "labels.csv")
    return report


def stage_profile(cfg: PipelineConfig, records=None, labels: Optional[np.ndarray] = None):
    if records is None:
        records = _load_cleaned(cfg)
    if labels is None:
        path = cfg.out / "labels.csv"
        if not path.exists():
            raise PipelineError(f"{path} not found; run `validate` first")
        ids, labels = read_labels_csv(path)
        by_id = dict(zip(ids, labels))
        missing = [r.property_id for r in records if r.property_id not in by_id]
        if missing:
            raise PipelineError(f"labels.csv is missing {len(missing)} record ids (e.g. {missing[0]})")
        labels = np.array([by_id[r.property_id] for r in records])
    profs = profile_clusters(records, labels)
    write_profiles_json(profs, cfg.out / "profiles.json")
    write_urban_rural_csv(urban_rural_distribution(records, labels), cfg.out / "urban_rural.csv")
    revenue, occupancy = descriptive_series(records, cfg.window_start, cfg.window_end)
    write_series_csv(revenue, cfg.out / "series_revenue.csv", cfg.window_start, cfg.window_end)
    write_series_csv(occupancy, cfg.out / "series_occupancy.csv", cfg.window_start, cfg.window_end)
    export_cluster_points(records, labels, cfg.out / "cluster_points.csv")
    return profs


def stage_elbow(cfg: PipelineConfig, space: Optional[FeatureMatrix] = None):
    if space is None:
        src = cfg.out / "cluster_space.csv"
        if src.exists():
            space = _load_space(cfg)
        else:
            cfg.validate()
            if cfg.synthetic_mode and not (cfg.out / "synthetic.csv").exists():
                stage_generate(cfg)
            records, _ = stage_ingest(cfg)
            encoded, _, _ = stage_preprocess(cfg, records)
            space, _ = stage_pca(cfg, encoded)
    n = space.n
    ks = [k for k in cfg.k_list if k <= n]
    if not ks:
        raise PipelineError(f"no k in k_list is feasible for n={n}")
    curve = elbow_sweep(
        space.values,
        ks,
        algorithm="kmeans" if cfg.elbow_algorithm == "kmeans" else "kmedoids_clara",
        seed=cfg.seed,
        sensitivity=cfg.sensitivity,
        restarts=cfg.kmeans_restarts,
        clara_samples=cfg.clara_samples,
        clara_sample_size=cfg.clara_sample_size,
    )
    with open(cfg.out / "elbow.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "cost", "selected", "knee_found"])
        for k, cost in zip(curve.ks, curve.costs):
            writer.writerow(
                [str(k), repr(cost), "1" if k == curve.selected_k else "0", "1" if curve.knee_found else "0"]
            )
    return curve


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    if cfg.synthetic_n is None or cfg.synthetic_k is None:
        raise UsageError("generate needs --n and --k (or synthetic_n/synthetic_k in the config)")
    records, _ = stage_generate(cfg, name=args.name)
    print(f"wrote {len(records)} records to {cfg.out / (args.name + '.csv')}")
    return 0


def cmd_ingest(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    cfg.validate()
    records, report = stage_ingest(cfg)
    print(f"kept {report.rows_kept} of {report.rows_read} rows -> {cfg.out / 'cleaned.csv'}")
    return 0


def cmd_preprocess(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    encoded, plan, imputed = stage_preprocess(cfg)
    print(
        f"encoded {encoded.n} x {encoded.d} matrix "
        f"({len(plan.log_columns)} log-transformed, {imputed} cells imputed)"
    )
    return 0


def cmd_pca(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    space, model = stage_pca(cfg)
    kept = float(model.explained_ratio[: model.n_selected].sum())
    print(f"selected {model.n_selected} components covering {kept:.1%} of variance")
    return 0


def cmd_cluster(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    km, cl = stage_cluster(cfg)
    print(f"kmeans k={km.k} inertia={km.inertia:.4f}; clara k={cl.k} cost={cl.inertia:.4f}")
    return 0


def cmd_elbow(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    curve = stage_elbow(cfg)
    note = "" if curve.knee_found else " (no knee detected; smallest k reported)"
    print(f"selected k={curve.selected_k}{note}")
    if cfg.plots:
        render_all(cfg.out)
    return 0


def cmd_validate(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    report = stage_validate(cfg)
    for s in report.per_model:
        print(f"{s.tag}: DBI={s.dbi:.4f} CHI={s.chi:.2f}")
    print(f"selected: {report.selected}")
    return 0


def cmd_profile(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    profs = stage_profile(cfg)
    print(f"profiled {len(profs)} clusters -> {cfg.out / 'profiles.json'}")
    if cfg.plots:
        render_all(cfg.out)
    return 0


def cmd_report(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    written = render_all(cfg.out)
    if not written:
        raise PipelineError(f"no renderable artifacts in {cfg.out}; run the pipeline first")
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_run(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    cfg.validate()
    cfg.out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config": cfg.echo(),
        "versions": {
            "propclust": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "seed": cfg.seed,
        "counts": {},
        "timings_s": {},
        "status": "failed",
        "failure_stage": None,
    }
    stage_name = "generate"
    try:
        t0 = time.perf_counter()
        records = None
        if cfg.synthetic_mode:
            records, _ = stage_generate(cfg)
            manifest["timings_s"]["generate"] = round(time.perf_counter() - t0, 4)

        stage_name = "ingest"
        t0 = time.perf_counter()
        records, report = stage_ingest(cfg)
        manifest["counts"].update(report.to_dict())
        manifest["timings_s"]["ingest"] = round(time.perf_counter() - t0, 4)

        stage_name = "preprocess"
        t0 = time.perf_counter()
        encoded, plan, imputed = stage_preprocess(cfg, records)
        manifest["counts"]["imputed_cells"] = imputed
        manifest["counts"]["n_features_encoded"] = encoded.d
        manifest["timings_s"]["preprocess"] = round(time.perf_counter() - t0, 4)

        stage_name = "pca"
        t0 = time.perf_counter()
        space, model = stage_pca(cfg, encoded)
        manifest["counts"]["n_components"] = model.n_selected
        manifest["counts"]["n_cluster_space_columns"] = space.d
        manifest["timings_s"]["pca"] = round(time.perf_counter() - t0, 4)

        stage_name = "cluster"
        t0 = time.perf_counter()
        km, cl = stage_cluster(cfg, space)
        manifest["timings_s"]["cluster"] = round(time.perf_counter() - t0, 4)

        stage_name = "validate"
        t0 = time.perf_counter()
        vreport = stage_validate(cfg, space, km, cl)
        manifest["counts"]["selected_model"] = vreport.selected
        if vreport.ari_vs_truth is not None:
            manifest["counts"]["ari_vs_truth"] = vreport.ari_vs_truth
        manifest["timings_s"]["validate"] = round(time.perf_counter() - t0, 4)

        stage_name = "profile"
        t0 = time.perf_counter()
        selected_labels = km.labels if vreport.selected == "kmeans" else cl.labels
        stage_profile(cfg, records, selected_labels)
        manifest["timings_s"]["profile"] = round(time.perf_counter() - t0, 4)

        if cfg.plots:
            stage_name = "report"
            t0 = time.perf_counter()
            render_all(cfg.out)
            manifest["timings_s"]["report"] = round(time.perf_counter() - t0, 4)

        manifest["status"] = "ok"
        print(f"pipeline complete; selected model: {vreport.selected}")
        return 0
    except (PipelineError, IngestError, ValueError, RuntimeError, OSError) as exc:
        manifest["failure_stage"] = stage_name
        manifest["error"] = str(exc)
        print(f"pipeline failed at {stage_name}: {exc}", file=sys.stderr)
        return 1
    finally:
        (cfg.out / "run_manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )


# ---------------------------------------------------------------------------

def _add_global_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")


def _date_arg(raw: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad date {raw!r}: use YYYY-MM-DD") from exc


def _k_list_arg(raw: str) -> list[int]:
    try:
        return [int(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad k list {raw!r}: use e.g. 2,3,4") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="propclust",
        description="Property-classification clustering pipeline",
    )
    parser.add_argument("--version", action="version", version=f"propclust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded synthetic dataset with planted clusters")
    _add_global_flags(p)
    p.add_argument("--n", type=int, dest="synthetic_n", help="number of records")
    p.add_argument("--k", type=int, dest="synthetic_k", help="number of planted clusters")
    p.add_argument("--sep", type=float, dest="synthetic_sep", default=None, help="center separation in within-cluster stds")
    p.add_argument("--urban-fraction", type=float, dest="synthetic_urban_fraction", default=None)
    p.add_argument("--rural-uplift", type=float, dest="synthetic_rural_uplift", default=None)
    p.add_argument("--name", default="synthetic", help="output file stem")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="load, window-filter and enrich property records")
    _add_global_flags(p)
    p.add_argument("--properties", type=Path, default=None, help="property CSV path")
    p.add_argument("--lsoa", type=Path, default=None, help="LSOA lookup CSV path")
    p.add_argument("--window-start", type=_date_arg, dest="window_start", default=None)
    p.add_argument("--window-end", type=_date_arg, dest="window_end", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="fit and apply the feature transform plan")
    _add_global_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pca", help="fit principal components and build the clustering space")
    _add_global_flags(p)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("cluster", help="run k-means and CLARA k-medoids at the configured k")
    _add_global_flags(p)
    p.add_argument("--kmeans-k", type=int, dest="kmeans_k", default=None)
    p.add_argument("--kmedoids-k", type=int, dest="kmedoids_k", default=None)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("elbow", help="sweep k and select the knee of the cost curve")
    _add_global_flags(p)
    p.add_argument("--ks", type=_k_list_arg, dest="k_list", default=None, help="comma-separated ks")
    p.add_argument("--algorithm", dest="elbow_algorithm", choices=["kmeans", "kmedoids"], default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--plots", action="store_true", default=None, help="also render figures")
    p.set_defaults(func=cmd_elbow)

    p = sub.add_parser("validate", help="score both models, cross-tabulate and select")
    _add_global_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("profile", help="profile the selected clustering")
    _add_global_flags(p)
    p.add_argument("--plots", action="store_true", default=None, help="also render figures")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("run", help="run the full pipeline and write a manifest")
    _add_global_flags(p)
    p.add_argument("--properties", type=Path, default=None)
    p.add_argument("--lsoa", type=Path, default=None)
    p.add_argument("--n", type=int, dest="synthetic_n", default=None)
    p.add_argument("--k", type=int, dest="synthetic_k", default=None)
    p.add_argument("--sep", type=float, dest="synthetic_sep", default=None)
    p.add_argument("--plots", action="store_true", default=None, help="also render figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render figures from the emitted artifacts")
    _add_global_flags(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, IngestError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
