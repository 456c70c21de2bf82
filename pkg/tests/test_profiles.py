import csv
from dataclasses import replace
from datetime import date

import numpy as np
import pytest

from conftest import make_record
from propclust.ingest import SyntheticSpec, generate_synthetic
from propclust.preprocess import apply_plan, build_raw_matrix, fit_plan
from propclust.profiles import (
    descriptive_series,
    export_cluster_points,
    profile_clusters,
    read_series_csv,
    urban_rural_distribution,
    write_series_csv,
    write_urban_rural_csv,
)
from propclust.records import NUMERIC_FIELDS, RATING_FIELDS


def test_single_cluster_profile_equals_global_means():
    rng = np.random.default_rng(0)
    recs = [
        make_record(property_id=f"p{i}", adr=float(rng.uniform(40, 200)))
        for i in range(30)
    ]
    profiles = profile_clusters(recs, np.zeros(30, dtype=int))
    assert len(profiles) == 1
    p = profiles[0]
    assert p.size == 30
    global_adr = np.mean([r.adr for r in recs])
    assert p.features["adr"].mean == pytest.approx(global_adr, rel=1e-12)


def test_planted_rating_shift_ranks_first():
    rng = np.random.default_rng(1)
    recs = []
    labels = []
    for i in range(200):
        cluster = i % 2
        rating = 2.0 if cluster == 0 else 4.5
        recs.append(
            make_record(
                property_id=f"p{i}",
                adr=float(rng.uniform(80, 90)),
                rating_overall=rating + float(rng.normal(0, 0.05)),
                rating_communication=rating + float(rng.normal(0, 0.05)),
                rating_accuracy=rating + float(rng.normal(0, 0.05)),
                rating_cleanliness=rating + float(rng.normal(0, 0.05)),
                rating_checkin=rating + float(rng.normal(0, 0.05)),
                rating_location=rating + float(rng.normal(0, 0.05)),
            )
        )
        labels.append(cluster)
    profiles = profile_clusters(recs, np.array(labels))
    top_feature = profiles[0].top_features[0][0]
    assert top_feature in RATING_FIELDS
    assert profiles[0].features["rating_overall"].mean < profiles[1].features["rating_overall"].mean


def test_urban_split_shares():
    recs = [make_record(property_id=f"p{i}", urban_rural="urban" if i < 5 else "rural") for i in range(10)]
    labels = np.array([0] * 5 + [1] * 5)
    profiles = profile_clusters(recs, labels)
    assert profiles[0].urban_share == 1.0
    assert profiles[1].urban_share == 0.0


def test_sizes_sum_to_n():
    rng = np.random.default_rng(2)
    recs = [make_record(property_id=f"p{i}") for i in range(50)]
    labels = rng.integers(0, 4, size=50)
    profiles = profile_clusters(recs, labels)
    assert sum(p.size for p in profiles) == 50


def test_urban_rural_distribution_counts():
    recs = [make_record(property_id=f"p{i}", urban_rural="urban" if i % 3 else "rural") for i in range(30)]
    labels = np.array([i % 2 for i in range(30)])
    rows = urban_rural_distribution(recs, labels)
    for cluster, urban, rural in rows:
        assert urban + rural == int(np.sum(labels == cluster))


def test_all_urban_data_has_zero_rural_counts():
    recs = [make_record(property_id=f"p{i}", urban_rural="urban") for i in range(12)]
    rows = urban_rural_distribution(recs, np.array([i % 3 for i in range(12)]))
    assert all(rural == 0 for _, _, rural in rows)


def test_planted_urban_fraction_passthrough():
    recs, _ = generate_synthetic(
        SyntheticSpec(n_points=300, n_clusters=1, separation=0.0, seed=4, urban_fraction=0.7)
    )
    rows = urban_rural_distribution(recs, np.zeros(300, dtype=int))
    assert rows == [(0, 210, 90)]


def test_series_single_record():
    rec = make_record(first_active=date(2020, 3, 10), last_active=date(2020, 5, 2))
    revenue, occupancy = descriptive_series([rec])
    by_month = {r["month"]: r for r in revenue}
    assert by_month["2020-03"]["urban"] == rec.annual_revenue
    assert by_month["2020-05"]["urban"] == rec.annual_revenue
    assert by_month["2020-06"]["urban"] is None
    assert all(r["rural"] is None for r in revenue)
    occ = {r["month"]: r for r in occupancy}
    assert occ["2020-04"]["urban"] == rec.occupancy_rate


def test_series_empty_input():
    assert descriptive_series([]) == ([], [])


def test_series_rural_occupancy_uplift_passthrough():
    spec = SyntheticSpec(
        n_points=2000, n_clusters=1, separation=0.0, seed=5,
        urban_fraction=0.5, rural_occupancy_uplift=0.2,
    )
    recs, _ = generate_synthetic(spec)
    urban_mean = np.mean([r.occupancy_rate for r in recs if r.urban_rural == "urban"])
    rural_mean = np.mean([r.occupancy_rate for r in recs if r.urban_rural == "rural"])
    assert rural_mean - urban_mean == pytest.approx(0.2, abs=0.02)

    _, occupancy = descriptive_series(recs)
    diffs = [
        r["rural"] - r["urban"]
        for r in occupancy
        if r["rural"] is not None and r["urban"] is not None
    ]
    assert len(diffs) >= 15
    # every month shows the uplift; thin early months (the window opens on
    # Jan 30) carry sampling noise, so per-month bounds are wider
    for d in diffs:
        assert d == pytest.approx(0.2, abs=0.1)
    assert float(np.median(diffs)) == pytest.approx(0.2, abs=0.03)


def test_series_csv_roundtrip(tmp_path):
    recs = [
        make_record(property_id="a"),
        make_record(property_id="b", urban_rural="rural", annual_revenue=8000.0),
    ]
    revenue, occupancy = descriptive_series(recs)
    path = tmp_path / "series_revenue.csv"
    write_series_csv(revenue, path)
    header = path.read_text().splitlines()[0]
    assert header.startswith("#") and "2020-01-30" in header and "2021-07-19" in header
    assert read_series_csv(path) == revenue
    path2 = tmp_path / "series_occupancy.csv"
    write_series_csv(occupancy, path2)
    assert read_series_csv(path2) == occupancy


def test_urban_rural_csv_roundtrip(tmp_path):
    rows = [(0, 10, 5), (1, 3, 7)]
    path = tmp_path / "urban_rural.csv"
    write_urban_rural_csv(rows, path)
    with open(path, newline="") as fh:
        got = [(int(r["cluster"]), int(r["urban"]), int(r["rural"])) for r in csv.DictReader(fh)]
    assert got == rows


def test_export_cluster_points(tmp_path):
    recs = [make_record(property_id=f"p{i}") for i in range(6)]
    recs[1] = replace(recs[1], latitude=None)
    recs[4] = replace(recs[4], longitude=None)
    labels = np.array([0, 0, 1, 1, 2, 2])
    path = tmp_path / "cluster_points.csv"
    skipped = export_cluster_points(recs, labels, path)
    assert skipped == 2
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    # rejoining by id reproduces the input assignments
    by_id = {r.property_id: lab for r, lab in zip(recs, labels)}
    for row in rows:
        assert int(row["cluster"]) == by_id[row["property_id"]]
        assert float(row["latitude"]) == 53.8


def test_inverse_transform_recovers_original_unit_means():
    """Un-zscore (and expm1 where logged) of standardized cluster means lands
    on the raw means: exact for linear columns, within 5% for logged ones
    (the log/exp mean gap stays small while within-cluster spread is mild)."""
    rng = np.random.default_rng(6)
    labels = np.array([0] * 180 + [1] * 180 + [2] * 40)
    revenue_level = np.array([8.0, 8.4, 12.0])
    recs = [
        make_record(
            property_id=f"p{i}",
            adr=float(rng.uniform(40, 250)),
            annual_revenue=float(np.exp(revenue_level[g] + rng.normal(0, 0.2))),
            occupancy_rate=float(rng.uniform(0.2, 0.9)),
            rating_overall=float(rng.uniform(3.0, 5.0)),
        )
        for i, g in enumerate(labels)
    ]
    raw = build_raw_matrix(recs)
    plan = fit_plan(raw, 2.0)
    assert "annual_revenue" in plan.log_columns
    encoded = apply_plan(raw, plan)
    for name in NUMERIC_FIELDS:
        if name in plan.dropped_constant:
            continue
        z = encoded.column(name)
        raw_col = raw.column(name)
        for g in range(3):
            idx = labels == g
            restored = float(np.mean(plan.inverse_numeric(name, [z[idx].mean()])))
            truth_mean = float(raw_col[idx].mean())
            if name in plan.log_columns:
                assert abs(restored - truth_mean) / abs(truth_mean) < 0.05, name
            elif abs(truth_mean) > 1e-9:
                assert abs(restored - truth_mean) / abs(truth_mean) < 1e-6, name


def test_empty_cluster_index_skipped_with_warning(caplog):
    recs = [make_record(property_id=f"p{i}") for i in range(4)]
    labels = np.array([0, 0, 2, 2])  # index 1 unused
    with caplog.at_level("WARNING"):
        profiles = profile_clusters(recs, labels)
    assert [p.cluster for p in profiles] == [0, 2]
    assert any("empty" in m for m in caplog.messages)
