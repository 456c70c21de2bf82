"""Clustering algorithms: k-means with k-means++ seeding, exact PAM k-medoids,
the CLARA sampling wrapper, and knee-point selection over a k sweep."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ALGO_KMEANS = "kmeans"
ALGO_PAM = "kmedoids_pam"
ALGO_CLARA = "kmedoids_clara"

SWAP_TOL = 1e-12


@dataclass(frozen=True)
class ClusterModel:
    """A fitted partition: labels, centers, assignment cost.

    `inertia` is the sum of squared distances to centroids for k-means and the
    sum of plain Euclidean distances to medoids for k-medoids.
    """

    algorithm: str
    k: int
    labels: np.ndarray
    centers: np.ndarray  # (k, d) centroids, or medoid coordinate rows
    inertia: float
    n_iter: int
    seed: int
    medoid_rows: Optional[tuple[int, ...]] = None
    inertia_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        centers = np.asarray(self.centers, dtype=np.float64)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        present = np.unique(labels)
        if not np.array_equal(present, np.arange(self.k)):
            raise ValueError(f"labels must cover 0..{self.k - 1}, got {present.tolist()}")
        if self.inertia < 0:
            raise ValueError("inertia must be non-negative")
        if self.medoid_rows is not None:
            if len(set(self.medoid_rows)) != self.k:
                raise ValueError("medoid rows must be k distinct row indices")
            if min(self.medoid_rows) < 0 or max(self.medoid_rows) >= labels.size:
                raise ValueError("medoid row index out of range")


def _check_points(points: np.ndarray, k: int) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be an n x d matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > x.shape[0]:
        raise ValueError(f"k={k} exceeds the number of points n={x.shape[0]}")
    return x


def _sq_dist_to_centers(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n, k)."""
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_pp_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """k-means++ seeding: first center uniform, the rest sampled with
    probability proportional to squared distance to the nearest chosen center."""
    x = _check_points(points, k)
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    if k == 1:
        return centers
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total == 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-4,
) -> ClusterModel:
    """Lloyd iteration from a k-means++ start.

    Assignment breaks ties toward the lowest center index; an empty cluster is
    reseeded with the point farthest from its assigned center. Stops when the
    largest centroid displacement falls below `tol`.
    """
    x = _check_points(points, k)
    n = x.shape[0]
    centers = kmeans_pp_init(x, k, seed)
    history: list[float] = []
    n_iter = 0

    def assign(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d2 = _sq_dist_to_centers(x, c)
        lab = np.argmin(d2, axis=1)
        best = d2[np.arange(n), lab]
        # Reseed each empty cluster with the farthest unclaimed point. A
        # reseed can empty a singleton cluster, so sweep until stable; every
        # sweep claims fresh rows, which bounds the loop by k passes.
        claimed = np.zeros(n, dtype=bool)
        for _ in range(k):
            empty = [j for j in range(k) if not np.any(lab == j)]
            if not empty:
                break
            for j in empty:
                far = int(np.argmax(np.where(claimed, -np.inf, best)))
                c[j] = x[far]
                lab[far] = j
                best[far] = 0.0
                claimed[far] = True
        else:
            if any(not np.any(lab == j) for j in range(k)):
                raise RuntimeError("failed to repopulate empty clusters")
        return lab, best

    for n_iter in range(1, max_iter + 1):
        labels, best = assign(centers)
        history.append(float(best.sum()))
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = x[labels == j].mean(axis=0)
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break

    labels, best = assign(centers)
    inertia = float(best.sum())
    history.append(inertia)
    return ClusterModel(
        algorithm=ALGO_KMEANS,
        k=k,
        labels=labels,
        centers=centers,
        inertia=inertia,
        n_iter=n_iter,
        seed=seed,
        inertia_history=tuple(history),
    )


def kmeans_best(
    points: np.ndarray,
    k: int,
    seed: int,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-4,
) -> ClusterModel:
    """Lowest-inertia run of `kmeans` over seeds seed..seed+restarts-1.

    Lloyd's iteration is sensitive to its start; restarting is the standard
    guard against bad local minima. Ties keep the earliest seed.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best: Optional[ClusterModel] = None
    for s in range(seed, seed + restarts):
        model = kmeans(points, k, seed=s, max_iter=max_iter, tol=tol)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def _medoid_cost(dist: np.ndarray, medoids: list[int]) -> float:
    return float(dist[:, medoids].min(axis=1).sum())


def pam(points: np.ndarray, k: int, seed: int = 0, max_swaps: int = 200) -> ClusterModel:
    """Partitioning Around Medoids: greedy BUILD, then best-improvement SWAP.

    Fully deterministic; ties break toward the lowest row index. Cost is the
    sum of plain Euclidean distances to the nearest medoid.
    """
    x = _check_points(points, k)
    n = x.shape[0]
    dist = np.sqrt(np.maximum(_sq_dist_to_centers(x, x), 0.0))

    # BUILD: start from the most central point, then greedily add the point
    # that lowers total cost the most.
    medoids = [int(np.argmin(dist.sum(axis=0)))]
    nearest = dist[:, medoids[0]].copy()
    while len(medoids) < k:
        best_idx, best_cost = -1, np.inf
        for cand in range(n):
            if cand in medoids:
                continue
            cost = float(np.minimum(nearest, dist[:, cand]).sum())
            if cost < best_cost:
                best_idx, best_cost = cand, cost
        medoids.append(best_idx)
        nearest = np.minimum(nearest, dist[:, best_idx])

    # SWAP: apply the single (medoid, non-medoid) exchange with the largest
    # cost decrease until no exchange helps.
    n_swaps = 0
    cost = _medoid_cost(dist, medoids)
    while n_swaps < max_swaps:
        best_pair, best_cost = None, cost
        for m in sorted(medoids):
            pos = medoids.index(m)
            for h in range(n):
                if h in medoids:
                    continue
                trial = list(medoids)
                trial[pos] = h
                c = _medoid_cost(dist, trial)
                if c < best_cost - SWAP_TOL:
                    best_pair, best_cost = (pos, h), c
        if best_pair is None:
            break
        medoids[best_pair[0]] = best_pair[1]
        cost = best_cost
        n_swaps += 1

    medoids = sorted(medoids)
    labels = np.argmin(dist[:, medoids], axis=1)
    inertia = _medoid_cost(dist, medoids)
    return ClusterModel(
        algorithm=ALGO_PAM,
        k=k,
        labels=labels,
        centers=x[medoids],
        inertia=inertia,
        n_iter=n_swaps,
        seed=seed,
        medoid_rows=tuple(medoids),
    )


def assign_to_medoids(points: np.ndarray, medoid_points: np.ndarray) -> tuple[np.ndarray, float]:
    """Nearest-medoid labels and total Euclidean cost over all points."""
    d = np.sqrt(np.maximum(_sq_dist_to_centers(points, medoid_points), 0.0))
    labels = np.argmin(d, axis=1)
    cost = float(d[np.arange(points.shape[0]), labels].sum())
    return labels, cost


def clara(
    points: np.ndarray,
    k: int,
    seed: int,
    n_samples: int = 5,
    sample_size: Optional[int] = None,
) -> ClusterModel:
    """CLARA: run PAM on seeded subsamples, keep the medoid set whose
    full-data cost is lowest."""
    x = _check_points(points, k)
    n = x.shape[0]
    if sample_size is None:
        sample_size = min(n, 40 + 2 * k)
    if sample_size < k:
        raise ValueError(f"sample_size={sample_size} is smaller than k={k}")
    if sample_size > n:
        raise ValueError(f"sample_size={sample_size} exceeds n={n}")

    rng = np.random.default_rng(seed)
    best: Optional[tuple[float, tuple[int, ...], np.ndarray]] = None
    for _ in range(n_samples):
        sample = np.sort(rng.choice(n, size=sample_size, replace=False))
        sub = pam(x[sample], k, seed=seed)
        medoid_rows = tuple(int(sample[i]) for i in sub.medoid_rows)
        labels, cost = assign_to_medoids(x, x[list(medoid_rows)])
        if best is None or cost < best[0]:
            best = (cost, medoid_rows, labels)

    cost, medoid_rows, labels = best
    return ClusterModel(
        algorithm=ALGO_CLARA,
        k=k,
        labels=labels,
        centers=x[list(medoid_rows)],
        inertia=cost,
        n_iter=n_samples,
        seed=seed,
        medoid_rows=medoid_rows,
    )


@dataclass(frozen=True)
class ElbowCurve:
    """Cost-vs-k sweep with the knee picked by the normalized difference curve."""

    ks: tuple[int, ...]
    costs: tuple[float, ...]
    selected_k: int
    sensitivity: float = 1.0
    knee_found: bool = True

    def __post_init__(self) -> None:
        if list(self.ks) != sorted(set(self.ks)):
            raise ValueError("ks must be strictly ascending")
        if self.selected_k not in self.ks:
            raise ValueError("selected_k must be one of ks")


def kneedle(
    ks: list[int] | tuple[int, ...],
    costs: list[float] | tuple[float, ...],
    sensitivity: float = 1.0,
) -> Optional[int]:
    """Knee of a decreasing cost curve via the normalized difference curve.

    Normalizes both axes to [0,1], computes delta_i = (1 - y_i) - x_i, and
    confirms a local maximum of delta once the curve later drops more than
    sensitivity * (mean x-spacing) below it. Returns the k at the knee, or
    None when no knee exists.
    """
    if len(ks) != len(costs):
        raise ValueError("ks and costs must have equal length")
    if len(ks) < 3:
        return None
    if any(c <= 0 for c in costs):
        raise ValueError("costs must be positive")
    x = np.asarray(ks, dtype=np.float64)
    y = np.asarray(costs, dtype=np.float64)
    if x[-1] == x[0] or y.max() == y.min():
        return None
    xn = (x - x.min()) / (x.max() - x.min())
    yn = (y - y.min()) / (y.max() - y.min())
    delta = (1.0 - yn) - xn

    maxima = [
        i
        for i in range(1, len(delta) - 1)
        if delta[i] > delta[i - 1] and delta[i] >= delta[i + 1]
    ]
    if not maxima:
        return None
    spacing = float(np.mean(np.diff(xn)))
    for pos, m in enumerate(maxima):
        threshold = delta[m] - sensitivity * spacing
        end = maxima[pos + 1] if pos + 1 < len(maxima) else len(delta)
        for j in range(m + 1, end):
            if delta[j] < threshold:
                return int(ks[m])
    return None


def elbow_sweep(
    points: np.ndarray,
    ks: list[int],
    algorithm: str = ALGO_KMEANS,
    seed: int = 0,
    sensitivity: float = 1.0,
    restarts: int = 1,
    clara_samples: int = 5,
    clara_sample_size: Optional[int] = None,
) -> ElbowCurve:
    """Fit the algorithm at each k and select the knee of the cost curve.

    Falls back to the smallest k (flagged) when no knee is detected.
    """
    if list(ks) != sorted(set(ks)):
        raise ValueError("ks must be strictly ascending")
    costs = []
    for k in ks:
        if algorithm == ALGO_KMEANS:
            model = kmeans_best(points, k, seed=seed, restarts=restarts)
        elif algorithm == ALGO_CLARA:
            model = clara(points, k, seed=seed, n_samples=clara_samples, sample_size=clara_sample_size)
        elif algorithm == ALGO_PAM:
            model = pam(points, k, seed=seed)
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        costs.append(model.inertia)

    knee = kneedle(ks, costs, sensitivity=sensitivity) if len(ks) >= 3 else None
    return ElbowCurve(
        ks=tuple(ks),
        costs=tuple(costs),
        selected_k=knee if knee is not None else ks[0],
        sensitivity=sensitivity,
        knee_found=knee is not None,
    )


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters by first occurrence so permuted runs compare equal."""
    labels = np.asarray(labels)
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[int(lab)] = len(mapping)
        out[i] = mapping[int(lab)]
    return out
