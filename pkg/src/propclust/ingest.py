"""Reading property CSVs, pandemic-window filtering, LSOA attribute joins,
and seeded synthetic dataset generation."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from .records import (
    CITYTOWN_LEVELS,
    NUMERIC_FIELDS,
    PROPERTY_TYPES,
    STUDY_WINDOW_DAYS,
    STUDY_WINDOW_END,
    STUDY_WINDOW_START,
    PropertyRecord,
    record_field_names,
    validate_record,
)

log = logging.getLogger(__name__)


class IngestError(Exception):
    """Input file unreadable or structurally unusable."""


@dataclass(frozen=True)
class DateWindow:
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError("window start is after window end")

    def overlaps(self, first: date, last: date) -> bool:
        return first <= self.end and last >= self.start


STUDY_WINDOW = DateWindow(STUDY_WINDOW_START, STUDY_WINDOW_END)


@dataclass(frozen=True)
class LsoaAttributes:
    """Area attributes joined onto records by LSOA code."""

    lsoa_code: str
    imd_index: float
    ahah_index: float
    citytown_class: str
    urban_rural: str


@dataclass
class IngestReport:
    """Exact row accounting for one ingest run."""

    rows_read: int = 0
    rows_kept: int = 0
    rows_dropped_window: int = 0
    rows_dropped_join_miss: int = 0
    rows_dropped_invalid: int = 0

    def check(self) -> None:
        dropped = (
            self.rows_dropped_window + self.rows_dropped_join_miss + self.rows_dropped_invalid
        )
        if self.rows_read != self.rows_kept + dropped:
            raise ValueError(
                f"ingest accounting broken: read {self.rows_read} != "
                f"kept {self.rows_kept} + dropped {dropped}"
            )

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped_window": self.rows_dropped_window,
            "rows_dropped_join_miss": self.rows_dropped_join_miss,
            "rows_dropped_invalid": self.rows_dropped_invalid,
        }


_INT_FIELDS = {
    "num_bookings",
    "bedrooms",
    "max_guests",
    "minimum_stay",
    "reservation_days",
    "available_days",
    "blocked_days",
    "num_photos",
    "host_num_listings",
}
_FLOAT_FIELDS = {
    "adr",
    "annual_revenue",
    "occupancy_rate",
    "bathrooms",
    "property_response",
    "host_response",
    "cleaning_fee",
}
_OPT_FLOAT_FIELDS = {
    "rating_overall",
    "rating_communication",
    "rating_accuracy",
    "rating_cleanliness",
    "rating_checkin",
    "rating_location",
    "ahah_index",
    "imd_index",
    "latitude",
    "longitude",
}
_OPT_STR_FIELDS = {"urban_rural", "citytown_class"}
_DATE_FIELDS = {"first_active", "last_active"}


def _parse_row(row: dict[str, str]) -> PropertyRecord:
    kwargs: dict = {}
    for name in record_field_names():
        raw = row[name]
        raw = raw.strip() if raw is not None else ""
        if name in _INT_FIELDS:
            kwargs[name] = int(raw)
        elif name in _FLOAT_FIELDS:
            kwargs[name] = float(raw)
        elif name in _OPT_FLOAT_FIELDS:
            kwargs[name] = float(raw) if raw else None
        elif name in _OPT_STR_FIELDS:
            kwargs[name] = raw if raw else None
        elif name in _DATE_FIELDS:
            kwargs[name] = date.fromisoformat(raw)
        else:
            if not raw:
                raise ValueError(f"missing required field {name}")
            kwargs[name] = raw
    return PropertyRecord(**kwargs)


def load_properties(
    path: Path, window: DateWindow = STUDY_WINDOW
) -> tuple[list[PropertyRecord], IngestReport]:
    """Read a property CSV, keeping valid records whose activity interval
    overlaps the window. Malformed or invalid rows are counted and skipped."""
    report = IngestReport()
    records: list[PropertyRecord] = []
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        expected = record_field_names()
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            raise IngestError(
                f"{path}: header mismatch; expected columns {expected}"
            )
        for row in reader:
            report.rows_read += 1
            try:
                rec = _parse_row(row)
            except (ValueError, KeyError, TypeError):
                report.rows_dropped_invalid += 1
                continue
            if validate_record(rec):
                report.rows_dropped_invalid += 1
                continue
            if not window.overlaps(rec.first_active, rec.last_active):
                report.rows_dropped_window += 1
                continue
            records.append(rec)
            report.rows_kept += 1
    report.check()
    return records, report


def load_lsoa_lookup(path: Path) -> dict[str, LsoaAttributes]:
    """Read the LSOA attribute table keyed by LSOA code."""
    lookup: dict[str, LsoaAttributes] = {}
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        expected = ["lsoa_code", "imd_index", "ahah_index", "citytown_class", "urban_rural"]
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            raise IngestError(f"{path}: header mismatch; expected columns {expected}")
        for row in reader:
            code = row["lsoa_code"].strip()
            if code in lookup:
                raise IngestError(f"{path}: duplicate lsoa_code {code!r}")
            lookup[code] = LsoaAttributes(
                lsoa_code=code,
                imd_index=float(row["imd_index"]),
                ahah_index=float(row["ahah_index"]),
                citytown_class=row["citytown_class"].strip(),
                urban_rural=row["urban_rural"].strip(),
            )
    return lookup


def join_lsoa(
    records: list[PropertyRecord], lookup: dict[str, LsoaAttributes]
) -> tuple[list[PropertyRecord], int]:
    """Fill area attributes from the lookup; drop and count records whose
    LSOA code is missing from it. Joining twice is a no-op."""
    joined: list[PropertyRecord] = []
    misses = 0
    for rec in records:
        attrs = lookup.get(rec.lsoa_code)
        if attrs is None:
            misses += 1
            continue
        joined.append(
            replace(
                rec,
                imd_index=attrs.imd_index,
                ahah_index=attrs.ahah_index,
                citytown_class=attrs.citytown_class,
                urban_rural=attrs.urban_rural,
            )
        )
    return joined, misses


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the planted-cluster generator that stands in for the
    proprietary data."""

    n_points: int
    n_clusters: int
    separation: float
    seed: int
    urban_fraction: float = 0.7
    rural_occupancy_uplift: float = 0.0

    def __post_init__(self) -> None:
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be at least 1")
        if self.n_points < self.n_clusters:
            raise ValueError("n_points must be at least n_clusters")
        if self.n_clusters > len(NUMERIC_FIELDS):
            raise ValueError(f"n_clusters must be at most {len(NUMERIC_FIELDS)}")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not 0.0 <= self.urban_fraction <= 1.0:
            raise ValueError("urban_fraction must be in [0,1]")


# Per-field affine maps from the standardized latent space into plausible
# raw units: (offset, scale).
_FIELD_MAPS = {
    "adr": (95.0, 30.0),
    "annual_revenue": (14000.0, 4500.0),
    "occupancy_rate": (0.45, 0.1),
    "num_bookings": (28.0, 8.0),
    "bedrooms": (2.5, 1.0),
    "bathrooms": (1.5, 0.5),
    "max_guests": (4.5, 1.5),
    "property_response": (0.85, 0.06),
    "host_response": (0.83, 0.07),
    "minimum_stay": (3.0, 1.2),
    "reservation_days": (150.0, 45.0),
    "available_days": (190.0, 55.0),
    "blocked_days": (80.0, 35.0),
    "num_photos": (18.0, 6.0),
    "rating_overall": (4.2, 0.35),
    "rating_communication": (4.3, 0.3),
    "rating_accuracy": (4.25, 0.3),
    "rating_cleanliness": (4.2, 0.32),
    "rating_checkin": (4.35, 0.28),
    "rating_location": (4.4, 0.27),
    "ahah_index": (50.0, 12.0),
    "imd_index": (21.0, 8.0),
    "host_num_listings": (4.0, 2.0),
    "cleaning_fee": (42.0, 15.0),
}


def _to_half_step(v: float) -> float:
    return round(v * 2.0) / 2.0


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[PropertyRecord], list[int]]:
    """Draw a Gaussian mixture with mutually `separation`-spaced components in
    the standardized numeric space, then map each dimension into valid field
    ranges. Returns the records and the planted component index per record."""
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n_points, spec.n_clusters
    d = len(NUMERIC_FIELDS)

    # Scaled standard-basis vertices have pairwise distance exactly
    # `separation`; a random orthogonal rotation spreads that separation
    # across all dimensions so no single bounded field has to carry it.
    centers = np.zeros((k, d))
    for c in range(k):
        centers[c, c] = spec.separation / np.sqrt(2.0)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q *= np.sign(np.diag(r))
    centers = centers @ q.T

    components = np.empty(n, dtype=np.int64)
    components[:k] = np.arange(k)
    components[k:] = rng.integers(0, k, size=n - k)
    latent = rng.standard_normal((n, d)) + centers[components]

    n_urban = int(round(spec.urban_fraction * n))
    urban_mask = np.zeros(n, dtype=bool)
    urban_mask[rng.permutation(n)[:n_urban]] = True

    property_types = rng.choice(
        np.array(PROPERTY_TYPES), size=n, p=[0.55, 0.3, 0.05, 0.1]
    )
    citytowns = rng.choice(np.array(CITYTOWN_LEVELS), size=n)
    latitudes = rng.uniform(50.0, 58.0, size=n)
    longitudes = rng.uniform(-5.5, 1.5, size=n)
    start_offsets = rng.integers(0, 480, size=n)  # within the study window
    durations = rng.integers(60, 500, size=n)
    has_ratings = rng.random(n) >= 0.12  # ~12% never reviewed

    records: list[PropertyRecord] = []
    for i in range(n):
        z = {f: latent[i, j] for j, f in enumerate(NUMERIC_FIELDS)}

        def mapped(field: str) -> float:
            off, scale = _FIELD_MAPS[field]
            return float(off + scale * z[field])

        occupancy = min(1.0, max(0.0, mapped("occupancy_rate")))
        if not urban_mask[i]:
            occupancy = min(1.0, max(0.0, occupancy + spec.rural_occupancy_uplift))

        res = max(0, int(round(mapped("reservation_days"))))
        avail = max(0, int(round(mapped("available_days"))))
        blocked = max(0, int(round(mapped("blocked_days"))))
        budget = res + avail + blocked
        if budget > STUDY_WINDOW_DAYS:
            scale = STUDY_WINDOW_DAYS / budget
            res = int(res * scale)
            avail = int(avail * scale)
            blocked = int(blocked * scale)

        first = STUDY_WINDOW_START + timedelta(days=int(start_offsets[i]))
        last = first + timedelta(days=int(durations[i]))

        ratings: dict[str, Optional[float]]
        if has_ratings[i]:
            ratings = {
                f: min(5.0, max(1.0, mapped(f)))
                for f in (
                    "rating_overall",
                    "rating_communication",
                    "rating_accuracy",
                    "rating_cleanliness",
                    "rating_checkin",
                    "rating_location",
                )
            }
        else:
            ratings = {
                f: None
                for f in (
                    "rating_overall",
                    "rating_communication",
                    "rating_accuracy",
                    "rating_cleanliness",
                    "rating_checkin",
                    "rating_location",
                )
            }

        rec = PropertyRecord(
            property_id=f"prop-{i:06d}",
            adr=max(0.0, mapped("adr")),
            annual_revenue=max(0.0, mapped("annual_revenue")),
            occupancy_rate=occupancy,
            num_bookings=max(0, int(round(mapped("num_bookings")))),
            bedrooms=max(0, int(round(mapped("bedrooms")))),
            bathrooms=max(0.0, _to_half_step(mapped("bathrooms"))),
            max_guests=max(1, int(round(mapped("max_guests")))),
            property_response=min(1.0, max(0.0, mapped("property_response"))),
            host_response=min(1.0, max(0.0, mapped("host_response"))),
            minimum_stay=max(1, int(round(mapped("minimum_stay")))),
            reservation_days=res,
            available_days=avail,
            blocked_days=blocked,
            num_photos=max(0, int(round(mapped("num_photos")))),
            **ratings,
            ahah_index=mapped("ahah_index"),
            imd_index=mapped("imd_index"),
            host_num_listings=max(1, int(round(mapped("host_num_listings")))),
            cleaning_fee=max(0.0, mapped("cleaning_fee")),
            property_type=str(property_types[i]),
            urban_rural="urban" if urban_mask[i] else "rural",
            citytown_class=str(citytowns[i]),
            lsoa_code=f"E{10000000 + i:08d}",
            latitude=float(latitudes[i]),
            longitude=float(longitudes[i]),
            first_active=first,
            last_active=last,
        )
        records.append(rec)

    labels = [int(c) for c in components]
    for rec in records:
        violations = validate_record(rec)
        if violations:
            raise RuntimeError(f"generator produced invalid record {rec.property_id}: {violations}")
    return records, labels


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, date):
        return v.isoformat()
    return str(v)


def write_properties_csv(records: list[PropertyRecord], path: Path) -> None:
    names = record_field_names()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for rec in records:
            writer.writerow([_format_value(getattr(rec, n)) for n in names])


def write_truth_csv(records: list[PropertyRecord], labels: list[int], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["property_id", "true_label"])
        for rec, lab in zip(records, labels):
            writer.writerow([rec.property_id, str(lab)])


def read_truth_csv(path: Path) -> dict[str, int]:
    truth: dict[str, int] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            truth[row["property_id"]] = int(row["true_label"])
    return truth


def write_lsoa_csv(rows: list[LsoaAttributes], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lsoa_code", "imd_index", "ahah_index", "citytown_class", "urban_rural"])
        for a in rows:
            writer.writerow(
                [a.lsoa_code, repr(a.imd_index), repr(a.ahah_index), a.citytown_class, a.urban_rural]
            )


def lsoa_lookup_for(records: list[PropertyRecord]) -> dict[str, LsoaAttributes]:
    """Build a lookup covering every record, echoing the attributes already on
    the records (used to round-trip generated data through the join)."""
    lookup: dict[str, LsoaAttributes] = {}
    for rec in records:
        if rec.lsoa_code not in lookup:
            lookup[rec.lsoa_code] = LsoaAttributes(
                lsoa_code=rec.lsoa_code,
                imd_index=rec.imd_index if rec.imd_index is not None else 0.0,
                ahah_index=rec.ahah_index if rec.ahah_index is not None else 0.0,
                citytown_class=rec.citytown_class or CITYTOWN_LEVELS[0],
                urban_rural=rec.urban_rural or "urban",
            )
    return lookup
