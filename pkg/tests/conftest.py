"""Shared fixtures and oracle helpers for the test suite."""

from datetime import date

import numpy as np

from propclust.records import PropertyRecord


def make_record(**overrides) -> PropertyRecord:
    """A valid baseline record; override individual fields per test."""
    base = dict(
        property_id="prop-000001",
        adr=85.0,
        annual_revenue=12000.0,
        occupancy_rate=0.5,
        num_bookings=20,
        bedrooms=2,
        bathrooms=1.5,
        max_guests=4,
        property_response=0.9,
        host_response=0.85,
        minimum_stay=2,
        reservation_days=150,
        available_days=200,
        blocked_days=50,
        num_photos=15,
        rating_overall=4.5,
        rating_communication=4.6,
        rating_accuracy=4.4,
        rating_cleanliness=4.3,
        rating_checkin=4.7,
        rating_location=4.8,
        ahah_index=48.0,
        imd_index=21.5,
        host_num_listings=3,
        cleaning_fee=40.0,
        property_type="entire-home",
        urban_rural="urban",
        citytown_class="large_town",
        lsoa_code="E01000001",
        latitude=53.8,
        longitude=-1.55,
        first_active=date(2020, 3, 1),
        last_active=date(2021, 5, 1),
    )
    base.update(overrides)
    return PropertyRecord(**base)


def block_correlation(block_sizes: list[int], rho: float) -> np.ndarray:
    """Block-constant correlation matrix; each block of size m contributes one
    eigenvalue 1+(m-1)*rho and m-1 eigenvalues 1-rho."""
    d = sum(block_sizes)
    c = np.eye(d)
    start = 0
    for b in block_sizes:
        c[start : start + b, start : start + b] = rho
        np.fill_diagonal(c[start : start + b, start : start + b], 1.0)
        start += b
    return c


def data_with_exact_covariance(cov: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Centered sample whose (n-1)-divisor covariance equals `cov` exactly
    (up to float rounding): whiten a random draw, then color it."""
    rng = np.random.default_rng(seed)
    d = cov.shape[0]
    g = rng.standard_normal((n, d))
    g -= g.mean(axis=0)
    s = g.T @ g / (n - 1)
    z = g @ np.linalg.inv(np.linalg.cholesky(s)).T
    return z @ np.linalg.cholesky(cov).T


def planted_blobs(seed: int, sep: float = 16.0, n_range=(6, 11), k_range=(2, 4), d_range=(2, 4)):
    """Tiny clustered fixture: k balanced Gaussian blobs whose closest pair of
    centers sits `sep` within-cluster standard deviations apart."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    k = int(rng.integers(*k_range))
    d = int(rng.integers(*d_range))
    centers = rng.normal(size=(k, d))
    dmin = min(
        np.linalg.norm(centers[i] - centers[j]) for i in range(k) for j in range(i + 1, k)
    )
    centers *= sep / dmin
    comps = np.sort(np.arange(n) % k)
    return rng.normal(size=(n, d)) + centers[comps], k


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.maximum(np.einsum("ijk,ijk->ij", diff, diff), 0.0))


def medoid_subset_cost(dist: np.ndarray, subset) -> float:
    return float(dist[:, list(subset)].min(axis=1).sum())
