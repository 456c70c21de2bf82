"""Acceptance gate: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Oracles are brute force, hand evaluation, or an independent
reference solver; none shares code with the implementation under test.
"""

import itertools
import json
import time
from itertools import combinations

import numpy as np
import pytest

from conftest import (
    block_correlation,
    data_with_exact_covariance,
    medoid_subset_cost,
    pairwise_distances,
    planted_blobs,
)
from propclust.cli import main as cli_main
from propclust.cluster import clara, kmeans, kneedle, pam
from propclust.pca import fit_pca, jacobi_eigh
from propclust.records import KIND_NUMERIC, ColumnMeta, FeatureMatrix
from propclust.validate import (
    ModelScore,
    calinski_harabasz,
    crosstab,
    davies_bouldin,
    select_model,
)


def _ok(criterion: str) -> None:
    print(f"PASS {criterion}")


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    """Two identical full-pipeline runs at the end-to-end scale."""
    base = tmp_path_factory.mktemp("acceptance")
    args = ["run", "--n", "2000", "--k", "4", "--sep", "8", "--seed", "11"]
    t0 = time.perf_counter()
    assert cli_main(args + ["--out", str(base / "a")]) == 0
    elapsed = time.perf_counter() - t0
    assert cli_main(args + ["--out", str(base / "b")]) == 0
    return base / "a", base / "b", elapsed


def test_criterion_1_pam_matches_brute_force():
    """PAM cost equals the exhaustive optimum over all medoid subsets on 100
    clustered fixtures (n <= 10, k <= 3) whose optimum is unique."""
    t0 = time.perf_counter()
    checked = 0
    seed = 0
    while checked < 100:
        x, k = planted_blobs(seed, sep=16.0)
        seed += 1
        dist = pairwise_distances(x)
        costs = sorted(
            medoid_subset_cost(dist, c)
            for c in itertools.combinations(range(len(x)), k)
        )
        if costs[1] - costs[0] <= 1e-6:  # exact equality needs a unique optimum
            continue
        checked += 1
        model = pam(x, k)
        assert model.inertia == costs[0], f"fixture seed {seed - 1}"
        assert x.shape[0] <= 10 and k <= 3
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    _ok(f"criterion 1: PAM equals brute-force optimum on 100 fixtures ({elapsed:.1f}s)")


def test_criterion_2_lloyd_inertia_monotone():
    """Inertia never increases across Lloyd iterations: 100 seeded runs,
    n=500, d=10, k in 2..6."""
    violations = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(500, 10))
        k = 2 + seed % 5
        model = kmeans(x, k, seed=seed)
        if np.any(np.diff(np.array(model.inertia_history)) > 1e-9):
            violations += 1
    assert violations == 0
    _ok("criterion 2: k-means inertia non-increasing in 100/100 runs")


def test_criterion_3_clara_degenerates_to_pam():
    """sample_size=n, n_samples=1 reproduces PAM labels and cost exactly."""
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 60))
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 5))
        x = rng.normal(size=(n, d))
        p = pam(x, k)
        c = clara(x, k, seed=seed, n_samples=1, sample_size=n)
        assert np.array_equal(p.labels, c.labels), f"seed {seed}"
        assert p.inertia == c.inertia, f"seed {seed}"
    _ok("criterion 3: CLARA(sample_size=n, n_samples=1) == PAM on 20 fixtures")


def test_criterion_4_hand_oracle_indices_and_invariances():
    points = np.array([[0.0], [2.0], [10.0], [12.0]])
    labels = np.array([0, 0, 1, 1])
    centroids = np.array([[1.0], [11.0]])
    assert davies_bouldin(points, labels, centroids) == pytest.approx(0.2, abs=1e-12)
    assert calinski_harabasz(points, labels, 2) == pytest.approx(50.0, abs=1e-12)

    rng = np.random.default_rng(42)
    x = rng.normal(size=(60, 4))
    glabels = np.arange(60) % 3
    centers = np.array([x[glabels == g].mean(0) for g in range(3)])
    dbi_ref = davies_bouldin(x, glabels, centers)
    chi_ref = calinski_harabasz(x, glabels, 3)
    for _ in range(20):
        q, r = np.linalg.qr(rng.normal(size=(4, 4)))
        q *= np.sign(np.diag(r))
        shift = rng.normal(size=4) * 100
        dbi = davies_bouldin(x @ q.T + shift, glabels, centers @ q.T + shift)
        assert abs(dbi - dbi_ref) / dbi_ref < 1e-9
        alpha = float(rng.uniform(0.01, 50.0))
        chi = calinski_harabasz(alpha * x, glabels, 3)
        assert abs(chi - chi_ref) / chi_ref < 1e-9
    _ok("criterion 4: DBI=0.2, CHI=50 at 1e-12; invariances at 1e-9 over 20 transforms")


def test_criterion_5_pca_against_reference_solver():
    rng = np.random.default_rng(7)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        m = rng.normal(size=(d, d))
        s = (m + m.T) / 2
        ev, _ = jacobi_eigh(s)
        np.testing.assert_allclose(np.sort(ev), np.linalg.eigvalsh(s), atol=1e-8)

    cov = block_correlation([6, 4, 3, 3, 3, 3, 2], 0.7)
    assert int(np.sum(np.linalg.eigvalsh(cov) >= 1.0)) == 7  # independent check
    x = data_with_exact_covariance(cov, 240, seed=5)
    cols = tuple(ColumnMeta(f"v{i:02d}", KIND_NUMERIC) for i in range(24))
    fm = FeatureMatrix(x, cols, tuple(f"r{i}" for i in range(240)))
    model = fit_pca(fm)
    np.testing.assert_allclose(model.loadings.T @ model.loadings, np.eye(24), atol=1e-8)
    assert abs(model.eigenvalues.sum() - 24.0) < 1e-6
    assert model.n_selected == 7
    _ok("criterion 5: eigenvalues match reference solver; Kaiser picks exactly 7")


def test_criterion_6_kneedle_reference_curves():
    assert kneedle([1, 2, 3, 4, 5, 6], [100.0, 40.0, 20.0, 18.0, 17.0, 16.5]) == 3
    assert kneedle([1, 2, 3, 4], [100.0, 1.0, 1.0, 1.0]) == 2
    assert kneedle([1, 2, 3, 4, 5], [50.0, 40.0, 30.0, 20.0, 10.0]) is None
    _ok("criterion 6: kneedle selects 3, 2, and none on the reference curves")


def test_criterion_7_end_to_end_recovery(pipeline_runs):
    out, _, elapsed = pipeline_runs
    validation = json.loads((out / "validation.json").read_text())
    assert validation["ari_vs_truth"] >= 0.9
    cfg = out / "cfg.txt"
    cfg.write_text(
        f"synthetic_n = 2000\nsynthetic_k = 4\nsynthetic_sep = 8\nseed = 11\n"
        f"out = {out}\nk_list = 2,3,4,5,6,7,8\n"
    )
    t0 = time.perf_counter()
    assert cli_main(["elbow", "--config", str(cfg)]) == 0
    elbow_elapsed = time.perf_counter() - t0
    rows = (out / "elbow.csv").read_text().splitlines()
    selected = [r.split(",")[0] for r in rows[1:] if r.split(",")[2] == "1"]
    assert selected == ["4"]
    total = elapsed + elbow_elapsed
    assert total < 60.0, f"took {total:.1f}s"
    _ok(
        "criterion 7: ARI "
        f"{validation['ari_vs_truth']:.3f} >= 0.9 and elbow selects k=4 ({total:.1f}s)"
    )


def test_criterion_8_crosstab_margins_reconcile():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(5, 500))
        tab = crosstab(rng.integers(0, 4, size=n), rng.integers(0, 6, size=n))
        assert tab.row_totals.sum() == tab.col_totals.sum() == tab.total == n
    # reference-shaped 4x6 table: row and column totals both sum to 386331
    cells = np.array(
        [
            [1752, 67499, 25, 386, 11, 39],
            [216, 488, 67776, 16917, 8354, 737],
            [32782, 179, 1517, 31458, 2514, 37945],
            [12556, 3, 91, 98861, 2907, 1318],
        ]
    )
    a = np.repeat(np.arange(4), cells.sum(axis=1))
    b = np.concatenate([np.repeat(np.arange(6), row) for row in cells])
    tab = crosstab(a, b)
    assert tab.row_totals.sum() == tab.col_totals.sum() == tab.total == 386331
    _ok("criterion 8: crosstab margins reconcile to n, including the 386331-total table")


def test_criterion_9_byte_determinism(pipeline_runs):
    a, b, _ = pipeline_runs
    for name in ("labels.csv", "validation.json", "profiles.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    _ok("criterion 9: labels.csv, validation.json, profiles.json byte-identical across reruns")


def test_criterion_10_select_model_reference_scores():
    scores = [
        ModelScore("kmeans", dbi=1.98, chi=68703.70),
        ModelScore("kmedoids", dbi=2.06, chi=43040.85),
    ]
    result = select_model(scores)
    assert result.selected == "kmeans"
    assert not result.disagreement and not result.tie
    _ok("criterion 10: reference score pair selects the k-means model with no flags")
