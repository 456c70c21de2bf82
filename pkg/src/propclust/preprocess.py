"""Feature-space construction: log transform of skewed columns, z-scoring,
ordinal and one-hot encoding of categoricals."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .records import (
    CITYTOWN_LEVELS,
    KIND_NOMINAL,
    KIND_NUMERIC,
    KIND_ONEHOT,
    KIND_ORDINAL,
    NUMERIC_FIELDS,
    TRANSFORM_LOG1P_ZSCORE,
    TRANSFORM_NONE,
    TRANSFORM_ZSCORE,
    ColumnMeta,
    FeatureMatrix,
    PropertyRecord,
)

log = logging.getLogger(__name__)

DEFAULT_SKEW_THRESHOLD = 2.0


class DegenerateColumnError(ValueError):
    """A column has zero variance where spread is required."""


def measure_skewness(column: np.ndarray) -> float:
    """Adjusted Fisher-Pearson sample skewness g1 * sqrt(n(n-1)) / (n-2).

    Requires at least 3 finite values and nonzero variance.
    """
    x = np.asarray(column, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("skewness needs a 1-d column with at least 3 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("skewness input must be finite")
    n = x.size
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev**2)
    if m2 == 0.0:
        raise DegenerateColumnError("zero-variance column")
    m3 = np.mean(dev**3)
    g1 = m3 / m2**1.5
    return float(g1 * np.sqrt(n * (n - 1)) / (n - 2))


@dataclass
class PreprocessPlan:
    """Fitted transform parameters, reusable on any matrix with the same schema."""

    skew_threshold: float
    column_schema: list[tuple[str, str]]  # (name, kind) of the fitted raw matrix
    log_columns: list[str] = field(default_factory=list)
    log_refused: list[str] = field(default_factory=list)  # skewed but has negatives
    dropped_constant: list[str] = field(default_factory=list)
    zscore_params: dict[str, tuple[float, float]] = field(default_factory=dict)
    ordinal_maps: dict[str, dict[str, int]] = field(default_factory=dict)
    onehot_maps: dict[str, list[str]] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "skew_threshold": self.skew_threshold,
            "column_schema": [list(t) for t in self.column_schema],
            "log_columns": self.log_columns,
            "log_refused": self.log_refused,
            "dropped_constant": self.dropped_constant,
            "zscore_params": {k: list(v) for k, v in self.zscore_params.items()},
            "ordinal_maps": self.ordinal_maps,
            "onehot_maps": self.onehot_maps,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "PreprocessPlan":
        d = json.loads(text)
        return PreprocessPlan(
            skew_threshold=d["skew_threshold"],
            column_schema=[tuple(t) for t in d["column_schema"]],
            log_columns=d["log_columns"],
            log_refused=d["log_refused"],
            dropped_constant=d["dropped_constant"],
            zscore_params={k: (v[0], v[1]) for k, v in d["zscore_params"].items()},
            ordinal_maps=d["ordinal_maps"],
            onehot_maps=d["onehot_maps"],
        )

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @staticmethod
    def load(path: Path) -> "PreprocessPlan":
        return PreprocessPlan.from_json(Path(path).read_text(encoding="utf-8"))

    def inverse_numeric(self, name: str, values: np.ndarray) -> np.ndarray:
        """Map standardized values of a numeric column back to original units."""
        mean, std = self.zscore_params[name]
        x = np.asarray(values, dtype=np.float64) * std + mean
        if name in self.log_columns:
            x = np.expm1(x)
        return x


def build_raw_matrix(records: list[PropertyRecord]) -> FeatureMatrix:
    """Assemble the raw feature matrix from enriched records.

    Numeric columns keep raw values (NaN for absent ratings); categorical
    columns hold float codes into each column's category vocabulary.
    """
    if not records:
        raise ValueError("no records to build a feature matrix from")
    n = len(records)
    cols: list[ColumnMeta] = []
    data: list[np.ndarray] = []

    for name in NUMERIC_FIELDS:
        vec = np.array(
            [np.nan if getattr(r, name) is None else float(getattr(r, name)) for r in records],
            dtype=np.float64,
        )
        cols.append(ColumnMeta(name=name, kind=KIND_NUMERIC))
        data.append(vec)

    # citytown_class is ordinal with a declared level order
    observed = [r.citytown_class for r in records]
    if any(v is None for v in observed):
        raise ValueError("citytown_class missing; join area attributes first")
    levels = tuple(lv for lv in CITYTOWN_LEVELS if lv in set(observed))
    code = {lv: float(i) for i, lv in enumerate(levels)}
    unknown = sorted(set(observed) - set(levels))
    if unknown:
        raise ValueError(f"unknown citytown_class levels: {unknown}")
    cols.append(ColumnMeta(name="citytown_class", kind=KIND_ORDINAL, categories=levels))
    data.append(np.array([code[v] for v in observed], dtype=np.float64))

    for name in ("property_type", "urban_rural"):
        observed = [getattr(r, name) for r in records]
        if any(v is None for v in observed):
            raise ValueError(f"{name} missing; join area attributes first")
        vocab = tuple(sorted(set(observed)))
        code = {v: float(i) for i, v in enumerate(vocab)}
        cols.append(ColumnMeta(name=name, kind=KIND_NOMINAL, categories=vocab))
        data.append(np.array([code[v] for v in observed], dtype=np.float64))

    values = np.column_stack(data)
    return FeatureMatrix(values=values, columns=tuple(cols), row_ids=tuple(r.property_id for r in records))


def _decode(meta: ColumnMeta, codes: np.ndarray) -> list[str]:
    cats = meta.categories
    if cats is None:
        raise ValueError(f"column {meta.name!r} has no category vocabulary")
    out = []
    for c in codes:
        i = int(round(float(c)))
        if not 0 <= i < len(cats) or abs(c - i) > 1e-9:
            raise ValueError(f"column {meta.name!r}: invalid category code {c!r}")
        out.append(cats[i])
    return out


def fit_plan(matrix: FeatureMatrix, skew_threshold: float = DEFAULT_SKEW_THRESHOLD) -> PreprocessPlan:
    """Fit transform parameters on a raw matrix.

    Numeric columns whose |adjusted skewness| exceeds the threshold are marked
    for log1p (unless they contain negatives); z-score statistics use the
    post-log values. Constant columns are dropped. Category maps are built from
    observed categories: ordinal by declared order, nominal lexicographically.
    """
    plan = PreprocessPlan(
        skew_threshold=skew_threshold,
        column_schema=[(c.name, c.kind) for c in matrix.columns],
    )
    n_kept = 0
    for j, meta in enumerate(matrix.columns):
        col = matrix.values[:, j]
        if meta.kind == KIND_NUMERIC:
            obs = col[np.isfinite(col)]
            if obs.size == 0 or np.all(obs == obs[0]):
                plan.dropped_constant.append(meta.name)
                continue
            skew = measure_skewness(obs)
            use_log = abs(skew) > skew_threshold
            if use_log and obs.min() < 0.0:
                plan.log_refused.append(meta.name)
                use_log = False
            full = col.copy()
            if use_log:
                plan.log_columns.append(meta.name)
                full = np.log1p(full)
            # missing cells take the observed mean, then stats cover the full
            # imputed column so z-scored fit data has unit variance exactly
            finite = np.isfinite(full)
            mean = float(full[finite].mean())
            full[~finite] = mean
            std = float(full.std(ddof=1))
            if std == 0.0:
                plan.dropped_constant.append(meta.name)
                if use_log:
                    plan.log_columns.remove(meta.name)
                continue
            plan.zscore_params[meta.name] = (mean, std)
            n_kept += 1
        elif meta.kind == KIND_ORDINAL:
            observed = sorted(set(_decode(meta, col)), key=meta.categories.index)
            if len(observed) < 2:
                plan.dropped_constant.append(meta.name)
                continue
            plan.ordinal_maps[meta.name] = {cat: rank for rank, cat in enumerate(observed)}
            n_kept += 1
        elif meta.kind == KIND_NOMINAL:
            observed = sorted(set(_decode(meta, col)))
            if len(observed) < 2:
                plan.dropped_constant.append(meta.name)
                continue
            plan.onehot_maps[meta.name] = observed
            n_kept += 1
        else:
            raise ValueError(f"cannot fit a plan over column kind {meta.kind!r}")
    if n_kept == 0:
        raise ValueError("all columns are constant; nothing to preprocess")
    return plan


def apply_plan(matrix: FeatureMatrix, plan: PreprocessPlan) -> FeatureMatrix:
    """Apply a fitted plan: log1p + z-score numerics, rank-scale ordinals to
    [0,1], expand nominals to 0/1 indicators. Output carries no NaN/Inf."""
    schema = [(c.name, c.kind) for c in matrix.columns]
    if schema != plan.column_schema:
        raise ValueError("matrix column schema differs from the one the plan was fit on")

    cols: list[ColumnMeta] = []
    data: list[np.ndarray] = []
    imputed = 0
    for j, meta in enumerate(matrix.columns):
        if meta.name in plan.dropped_constant:
            continue
        col = matrix.values[:, j]
        if meta.kind == KIND_NUMERIC:
            out = col.copy()
            if meta.name in plan.log_columns:
                out = np.log1p(out)
                transform = TRANSFORM_LOG1P_ZSCORE
            else:
                transform = TRANSFORM_ZSCORE
            mean, std = plan.zscore_params[meta.name]
            missing = ~np.isfinite(out)
            imputed += int(missing.sum())
            out[missing] = mean
            out = (out - mean) / std
            cols.append(ColumnMeta(name=meta.name, kind=KIND_NUMERIC, transform=transform))
            data.append(out)
        elif meta.kind == KIND_ORDINAL:
            mapping = plan.ordinal_maps[meta.name]
            m = len(mapping)
            ranks = []
            for cat in _decode(meta, col):
                if cat not in mapping:
                    raise ValueError(f"unseen category {cat!r} in column {meta.name!r}")
                ranks.append(mapping[cat] / (m - 1))
            cols.append(
                ColumnMeta(name=meta.name, kind=KIND_ORDINAL, categories=tuple(mapping))
            )
            data.append(np.array(ranks, dtype=np.float64))
        elif meta.kind == KIND_NOMINAL:
            categories = plan.onehot_maps[meta.name]
            decoded = _decode(meta, col)
            for cat in decoded:
                if cat not in categories:
                    raise ValueError(f"unseen category {cat!r} in column {meta.name!r}")
            for cat in categories:
                ind = np.array([1.0 if v == cat else 0.0 for v in decoded], dtype=np.float64)
                cols.append(
                    ColumnMeta(
                        name=f"{meta.name}={cat}",
                        kind=KIND_ONEHOT,
                        source_category=meta.name,
                    )
                )
                data.append(ind)
        else:
            raise ValueError(f"cannot apply a plan over column kind {meta.kind!r}")

    values = np.column_stack(data)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite values survived preprocessing")
    if imputed:
        log.info("imputed %d missing numeric cells with column means", imputed)
    return FeatureMatrix(values=values, columns=tuple(cols), row_ids=matrix.row_ids)


def count_missing(matrix: FeatureMatrix) -> int:
    """Number of NaN cells in a raw matrix (cells mean-imputed by apply_plan)."""
    return int(np.count_nonzero(~np.isfinite(matrix.values)))
