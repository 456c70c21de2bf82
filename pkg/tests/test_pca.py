import numpy as np
import pytest

from conftest import block_correlation, data_with_exact_covariance
from propclust.pca import (
    fit_pca,
    jacobi_eigh,
    loadings_table,
    project,
    reconstruct,
    variance_table,
)
from propclust.records import KIND_NUMERIC, ColumnMeta, FeatureMatrix


def _fm(x: np.ndarray, prefix: str = "v") -> FeatureMatrix:
    n, d = x.shape
    cols = tuple(ColumnMeta(f"{prefix}{i:02d}", KIND_NUMERIC) for i in range(d))
    return FeatureMatrix(x, cols, tuple(f"r{i}" for i in range(n)))


def _standardize(x: np.ndarray) -> np.ndarray:
    return (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)


def test_jacobi_matches_reference_solver():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        m = rng.normal(size=(d, d))
        s = (m + m.T) / 2
        ev, vec = jacobi_eigh(s)
        ref_ev, ref_vec = np.linalg.eigh(s)
        order = np.argsort(ev)
        np.testing.assert_allclose(ev[order], ref_ev, atol=1e-8)
        # eigenvector residuals and per-vector subspace alignment
        for j in range(d):
            res = s @ vec[:, j] - ev[j] * vec[:, j]
            assert np.linalg.norm(res) < 1e-8
        for rank, j in enumerate(order):
            cos_angle = abs(float(vec[:, j] @ ref_vec[:, rank]))
            assert cos_angle > 1.0 - 1e-6


def test_uncorrelated_pair():
    x = data_with_exact_covariance(np.eye(2), 200, seed=2)
    model = fit_pca(_fm(x))
    np.testing.assert_allclose(model.eigenvalues, [1.0, 1.0], atol=1e-9)
    # both eigenvalues sit on the selection boundary; the count follows the
    # >= rule on whichever side float noise lands them (never below 1 pick)
    assert model.n_selected == max(1, int(np.sum(model.eigenvalues >= 1.0)))


def test_selection_threshold_includes_ties():
    rng = np.random.default_rng(20)
    x = _standardize(rng.normal(size=(100, 4)) @ rng.normal(size=(4, 4)))
    fm = _fm(x)
    first = fit_pca(fm)
    boundary = float(first.eigenvalues[1])
    at_tie = fit_pca(fm, kaiser_threshold=boundary)
    above = fit_pca(fm, kaiser_threshold=np.nextafter(boundary, np.inf))
    assert at_tie.n_selected == above.n_selected + 1


def test_perfectly_correlated_pair():
    rng = np.random.default_rng(3)
    a = rng.normal(size=300)
    x = _standardize(np.column_stack([a, 2.0 * a]))
    model = fit_pca(_fm(x))
    np.testing.assert_allclose(model.eigenvalues, [2.0, 0.0], atol=1e-9)
    assert model.n_selected == 1


def test_invariants_on_24dim_fixture():
    cov = block_correlation([6, 4, 3, 3, 3, 3, 2], 0.7)
    x = data_with_exact_covariance(cov, 240, seed=4)
    model = fit_pca(_fm(x))
    d = 24
    np.testing.assert_allclose(model.loadings.T @ model.loadings, np.eye(d), atol=1e-8)
    assert abs(model.eigenvalues.sum() - d) < 1e-6  # trace preservation
    assert np.all(np.diff(model.eigenvalues) <= 1e-12)  # descending
    assert abs(model.explained_ratio.sum() - 1.0) < 1e-9
    assert np.all(model.eigenvalues >= 0.0)


def test_kaiser_selects_exactly_seven():
    """Block spectrum: 7 eigenvalues in [1.7, 4.5], the remaining 17 at 0.3."""
    cov = block_correlation([6, 4, 3, 3, 3, 3, 2], 0.7)
    ref = np.linalg.eigvalsh(cov)  # independent solver check at build time
    assert int(np.sum(ref >= 1.0)) == 7
    x = data_with_exact_covariance(cov, 240, seed=5)
    model = fit_pca(_fm(x))
    assert model.n_selected == 7
    cumulative = float(model.explained_ratio[:7].sum())
    assert 0.75 <= cumulative <= 0.83


def test_correlated_block_dominates_first_component():
    """The six-variable correlated block carries the largest loadings on one
    component, the way a block of rating variables would."""
    cov = block_correlation([6, 4, 3, 3, 3, 3, 2], 0.7)
    x = data_with_exact_covariance(cov, 240, seed=6)
    names = [f"rating_{i}" if i < 6 else f"other_{i}" for i in range(24)]
    cols = tuple(ColumnMeta(n, KIND_NUMERIC) for n in names)
    fm = FeatureMatrix(x, cols, tuple(f"r{i}" for i in range(240)))
    model = fit_pca(fm)
    # independent solver agrees on the dominant eigenvector's support
    ref_ev, ref_vec = np.linalg.eigh(cov)
    ref_top = np.argsort(-np.abs(ref_vec[:, np.argmax(ref_ev)]))[:6]
    assert sorted(ref_top.tolist()) == [0, 1, 2, 3, 4, 5]
    top6 = np.argsort(-np.abs(model.loadings[:, 0]))[:6]
    assert sorted(top6.tolist()) == [0, 1, 2, 3, 4, 5]


def test_sign_convention():
    rng = np.random.default_rng(7)
    x = _standardize(rng.normal(size=(100, 5)))
    model = fit_pca(_fm(x))
    for j in range(5):
        i = int(np.argmax(np.abs(model.loadings[:, j])))
        assert model.loadings[i, j] > 0


def test_projection_round_trip():
    rng = np.random.default_rng(8)
    x = _standardize(rng.normal(size=(60, 6)))
    fm = _fm(x)
    model = fit_pca(fm)
    scores = project(fm, model, k=6)
    back = reconstruct(scores, model)
    assert np.linalg.norm(back - x) < 1e-8


def test_rank_one_single_component_explains_everything():
    rng = np.random.default_rng(9)
    a = rng.normal(size=200)
    x = _standardize(np.column_stack([a, -3.0 * a]))
    fm = _fm(x)
    model = fit_pca(fm)
    scores = project(fm, model, k=1)
    total_var = x.var(axis=0, ddof=1).sum()
    assert scores.values[:, 0].var(ddof=1) / total_var == pytest.approx(1.0, abs=1e-9)
    # loadings table: PC0 weights proportional to the shared factor
    table = loadings_table(model)
    assert table[0] == ["feature", "PC0"]
    pc0 = [abs(float(row[1])) for row in table[1:]]
    assert pc0[0] == pytest.approx(pc0[1], abs=1e-9)


def test_score_covariance_is_diagonal_eigenvalues():
    rng = np.random.default_rng(10)
    x = _standardize(rng.normal(size=(150, 5)) @ rng.normal(size=(5, 5)))
    fm = _fm(x)
    model = fit_pca(fm)
    scores = project(fm, model, k=3)
    cov = np.cov(scores.values, rowvar=False, ddof=1)
    np.testing.assert_allclose(np.diag(cov), model.eigenvalues[:3], atol=1e-8)
    np.testing.assert_allclose(cov - np.diag(np.diag(cov)), 0.0, atol=1e-8)


def test_projection_is_linear():
    rng = np.random.default_rng(11)
    x = _standardize(rng.normal(size=(80, 4)))
    fm = _fm(x)
    model = fit_pca(fm)
    scaled = FeatureMatrix(2.5 * x, fm.columns, fm.row_ids)
    np.testing.assert_allclose(
        project(scaled, model, k=2).values, 2.5 * project(fm, model, k=2).values, atol=1e-10
    )


def test_loadings_table_dimensions():
    cov = block_correlation([3, 3, 2], 0.6)
    x = data_with_exact_covariance(cov, 100, seed=12)
    model = fit_pca(_fm(x))
    table = loadings_table(model)
    assert len(table) == 8 + 1
    assert len(table[1]) == model.n_selected + 1
    var_rows = variance_table(model)
    assert len(var_rows) == 8 + 1
    assert float(var_rows[-1][3]) == pytest.approx(1.0, abs=1e-9)


def test_schema_mismatch_names_columns():
    rng = np.random.default_rng(13)
    x = _standardize(rng.normal(size=(50, 3)))
    model = fit_pca(_fm(x))
    other = _fm(rng.normal(size=(50, 3)), prefix="w")
    with pytest.raises(ValueError, match="w00"):
        project(other, model)


def test_non_finite_input_fatal():
    x = np.zeros((10, 3))
    x[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        fit_pca(_fm(x))


def test_rank_deficiency_flagged():
    rng = np.random.default_rng(14)
    x = _standardize(rng.normal(size=(4, 6)))
    model = fit_pca(_fm(x))
    assert model.rank_deficient
    assert np.all(model.eigenvalues >= 0.0)
