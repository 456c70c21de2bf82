"""Record schema and feature-matrix types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date
from typing import Optional

import numpy as np

# Study window boundaries, both ends inclusive.
STUDY_WINDOW_START = date(2020, 1, 30)
STUDY_WINDOW_END = date(2021, 7, 19)
# Inclusive day count of the window, verified by calendar enumeration in tests.
STUDY_WINDOW_DAYS = 537

# The 24 numeric utilization/quality variables, in canonical column order.
NUMERIC_FIELDS = (
    "adr",
    "annual_revenue",
    "occupancy_rate",
    "num_bookings",
    "bedrooms",
    "bathrooms",
    "max_guests",
    "property_response",
    "minimum_stay",
    "reservation_days",
    "available_days",
    "blocked_days",
    "num_photos",
    "rating_overall",
    "rating_communication",
    "rating_accuracy",
    "rating_cleanliness",
    "rating_checkin",
    "rating_location",
    "ahah_index",
    "imd_index",
    "host_num_listings",
    "host_response",
    "cleaning_fee",
)

RATING_FIELDS = (
    "rating_overall",
    "rating_communication",
    "rating_accuracy",
    "rating_cleanliness",
    "rating_checkin",
    "rating_location",
)

COUNT_FIELDS = (
    "num_bookings",
    "bedrooms",
    "max_guests",
    "minimum_stay",
    "reservation_days",
    "available_days",
    "blocked_days",
    "num_photos",
    "host_num_listings",
)

# City-town classification levels, ordered most to least urban.
CITYTOWN_LEVELS = (
    "core_city_london",
    "core_city",
    "other_city",
    "large_town",
    "medium_town",
    "small_town",
    "village_or_smaller",
)

PROPERTY_TYPES = ("entire-home", "private-room", "hotel-room", "shared-room")

URBAN_RURAL = ("urban", "rural")


@dataclass(frozen=True)
class PropertyRecord:
    """One vacation-rental listing with utilization, quality and area attributes."""

    property_id: str
    adr: float
    annual_revenue: float
    occupancy_rate: float
    num_bookings: int
    bedrooms: int
    bathrooms: float
    max_guests: int
    property_response: float
    host_response: float
    minimum_stay: int
    reservation_days: int
    available_days: int
    blocked_days: int
    num_photos: int
    rating_overall: Optional[float]
    rating_communication: Optional[float]
    rating_accuracy: Optional[float]
    rating_cleanliness: Optional[float]
    rating_checkin: Optional[float]
    rating_location: Optional[float]
    ahah_index: Optional[float]
    imd_index: Optional[float]
    host_num_listings: int
    cleaning_fee: float
    property_type: str
    urban_rural: Optional[str]
    citytown_class: Optional[str]
    lsoa_code: str
    latitude: Optional[float]
    longitude: Optional[float]
    first_active: date
    last_active: date


def validate_record(r: PropertyRecord) -> list[str]:
    """Check every record invariant; return one message per violation.

    Total function: never raises, same record always yields the same list.
    """
    violations: list[str] = []
    for name in ("occupancy_rate", "property_response", "host_response"):
        v = getattr(r, name)
        if not 0.0 <= v <= 1.0:
            violations.append(f"{name} out of [0,1]")
    if r.reservation_days + r.available_days + r.blocked_days > STUDY_WINDOW_DAYS:
        violations.append(f"day budget exceeds {STUDY_WINDOW_DAYS}")
    for name in COUNT_FIELDS:
        if getattr(r, name) < 0:
            violations.append(f"{name} must be >= 0")
    if r.bathrooms < 0:
        violations.append("bathrooms must be >= 0")
    elif abs(r.bathrooms * 2 - round(r.bathrooms * 2)) > 1e-9:
        violations.append("bathrooms must step by 0.5")
    for name in ("adr", "annual_revenue", "cleaning_fee"):
        if getattr(r, name) < 0:
            violations.append(f"{name} must be >= 0")
    for name in RATING_FIELDS:
        v = getattr(r, name)
        if v is not None and not 1.0 <= v <= 5.0:
            violations.append(f"{name} out of [1,5]")
    if r.urban_rural is not None and r.urban_rural not in URBAN_RURAL:
        violations.append("urban_rural not in {urban, rural}")
    if r.first_active > r.last_active:
        violations.append("first_active after last_active")
    return violations


# Column kinds. Raw matrices carry numeric/ordinal/nominal columns; after
# preprocessing nominal columns become nominal_onehot indicator columns.
KIND_NUMERIC = "numeric"
KIND_ORDINAL = "ordinal"
KIND_NOMINAL = "nominal"
KIND_ONEHOT = "nominal_onehot"

TRANSFORM_NONE = "none"
TRANSFORM_LOG1P = "log1p"
TRANSFORM_ZSCORE = "zscore"
TRANSFORM_LOG1P_ZSCORE = "log1p_then_zscore"


@dataclass(frozen=True)
class ColumnMeta:
    """Per-column metadata: name, kind, transform applied, category vocabulary.

    Raw ordinal/nominal columns store float codes indexing into `categories`.
    One-hot columns record the originating nominal column in `source_category`.
    """

    name: str
    kind: str
    transform: str = TRANSFORM_NONE
    source_category: Optional[str] = None
    categories: Optional[tuple[str, ...]] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "transform": self.transform,
            "source_category": self.source_category,
            "categories": list(self.categories) if self.categories is not None else None,
        }

    @staticmethod
    def from_dict(d: dict) -> "ColumnMeta":
        cats = d.get("categories")
        return ColumnMeta(
            name=d["name"],
            kind=d["kind"],
            transform=d.get("transform", TRANSFORM_NONE),
            source_category=d.get("source_category"),
            categories=tuple(cats) if cats is not None else None,
        )


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense n x d float64 matrix with column metadata and stable row ids."""

    values: np.ndarray
    columns: tuple[ColumnMeta, ...]
    row_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError(f"feature matrix must be 2-d, got shape {vals.shape}")
        if vals.shape[1] != len(self.columns):
            raise ValueError(
                f"column metadata length {len(self.columns)} != matrix width {vals.shape[1]}"
            )
        if vals.shape[0] != len(self.row_ids):
            raise ValueError(
                f"row id count {len(self.row_ids)} != matrix height {vals.shape[0]}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "row_ids", tuple(self.row_ids))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(f"no column named {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def select(self, names: list[str]) -> "FeatureMatrix":
        idx = [self.column_index(n) for n in names]
        return FeatureMatrix(
            values=self.values[:, idx].copy(),
            columns=tuple(self.columns[i] for i in idx),
            row_ids=self.row_ids,
        )

    def select_kinds(self, kinds: tuple[str, ...]) -> "FeatureMatrix":
        idx = [i for i, c in enumerate(self.columns) if c.kind in kinds]
        return FeatureMatrix(
            values=self.values[:, idx].copy(),
            columns=tuple(self.columns[i] for i in idx),
            row_ids=self.row_ids,
        )

    def hstack(self, other: "FeatureMatrix") -> "FeatureMatrix":
        if self.row_ids != other.row_ids:
            raise ValueError("row ids differ; cannot stack feature matrices")
        return FeatureMatrix(
            values=np.hstack([self.values, other.values]),
            columns=self.columns + other.columns,
            row_ids=self.row_ids,
        )


def record_field_names() -> list[str]:
    """CSV column order: exactly the PropertyRecord field list."""
    return [f.name for f in fields(PropertyRecord)]
