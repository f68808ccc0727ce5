"""Lloyd's k-means over the rating matrix, with cluster-center diagnostics.

Initialization draws k distinct data rows with a seeded generator, iteration
alternates nearest-center assignment (squared Euclidean distance, ties to
the lowest center index) with mean updates, and stops on exact centroid
equality. Clusters that empty out are reseeded with the point farthest from
its own center, which cannot increase the objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .errors import KTooLarge, NumericalError, ValidationError
from .model import RatingMatrix
from .validation import as_float_matrix, check_same_width


@dataclass(frozen=True)
class ClusterSolution:
    """A converged clustering: 1-based cluster index per row id, final and
    initial centers, the objective and its per-iteration trajectory."""

    k: int
    assignments: dict[int, int]
    centroids: np.ndarray
    wcss: float
    wcss_trajectory: tuple[float, ...]
    iterations: int
    initial_centroids: np.ndarray
    seed: int | None
    row_ids: tuple[int, ...]

    @property
    def labels(self) -> np.ndarray:
        """0-based labels in row order."""
        return np.array([self.assignments[r] - 1 for r in self.row_ids])

    def members(self, cluster: int) -> tuple[int, ...]:
        """Row ids assigned to the 1-based ``cluster`` index."""
        return tuple(r for r in self.row_ids if self.assignments[r] == cluster)


@dataclass(frozen=True)
class CenterDistanceMatrix:
    """Pairwise Euclidean distances between final centers."""

    distances: np.ndarray
    min_off_diagonal: float | None


def _matrix_values(matrix) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(matrix, RatingMatrix):
        return matrix.values, matrix.concept_ids
    X = as_float_matrix(matrix)
    return X, tuple(range(1, X.shape[0] + 1))


def init_centroids(matrix, k: int, seed: int) -> np.ndarray:
    """Pick k distinct data rows uniformly without replacement (seeded)."""
    X, _ = _matrix_values(matrix)
    n = X.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k exceeds row count: k={k}, rows={n}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=k, replace=False)
    return X[chosen].copy()


def assign(points, centroids) -> np.ndarray:
    """Label each point with its nearest center (0-based); ties go to the
    lowest center index."""
    X = as_float_matrix(points)
    C = as_float_matrix(centroids)
    check_same_width(X, C)
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def update_centroids(points, labels, k: int) -> np.ndarray:
    """Mean of each cluster; an empty cluster is reseeded with the point
    farthest from its current center (each point donates at most once)."""
    X = as_float_matrix(points)
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= k:
        raise ValidationError(f"labels must lie in 0..{k - 1}")
    centers = np.zeros((k, X.shape[1]))
    empty = []
    for c in range(k):
        members = X[labels == c]
        if members.shape[0] == 0:
            empty.append(c)
        else:
            centers[c] = members.mean(axis=0)
    if empty:
        dist = ((X - centers[labels]) ** 2).sum(axis=1)
        taken: set[int] = set()
        for c in empty:
            order = np.argsort(-dist, kind="stable")
            donor = next(int(i) for i in order if int(i) not in taken)
            taken.add(donor)
            centers[c] = X[donor]
    return centers


def lloyd(
    matrix,
    k: int,
    seed: int = 42,
    max_iter: int = 100,
    initial_centers=None,
) -> ClusterSolution:
    """Run Lloyd iterations until no centroid changes or ``max_iter``.

    The trajectory records the objective after every assignment step and is
    non-increasing. ``initial_centers`` overrides the seeded draw (used by
    exhaustive-initialization audits).
    """
    X, row_ids = _matrix_values(matrix)
    n = X.shape[0]
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    if initial_centers is None:
        centers = init_centroids(X, k, seed)
    else:
        centers = as_float_matrix(initial_centers).copy()
        if centers.shape[0] != k:
            raise ValidationError(
                f"initial_centers has {centers.shape[0]} rows, expected k={k}"
            )
        check_same_width(X, centers)
    if k > n:
        raise KTooLarge(f"k exceeds row count: k={k}, rows={n}")
    initial = centers.copy()

    trajectory: list[float] = []
    labels = assign(X, centers)
    iterations = 0
    for _ in range(max_iter):
        trajectory.append(float(((X - centers[labels]) ** 2).sum()))
        new_centers = update_centroids(X, labels, k)
        iterations += 1
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
        labels = assign(X, centers)

    wcss = float(((X - centers[labels]) ** 2).sum())
    if len(np.unique(labels)) != k:
        raise NumericalError(
            "clustering ended with an empty cluster; increase max_iter"
        )
    assignments = {rid: int(labels[i]) + 1 for i, rid in enumerate(row_ids)}
    return ClusterSolution(
        k=k,
        assignments=assignments,
        centroids=centers,
        wcss=wcss,
        wcss_trajectory=tuple(trajectory),
        iterations=iterations,
        initial_centroids=initial,
        seed=None if initial_centers is not None else seed,
        row_ids=row_ids,
    )


def center_distances(centroids) -> CenterDistanceMatrix:
    """Pairwise Euclidean distance matrix between centers, plus its smallest
    off-diagonal entry."""
    C = as_float_matrix(centroids)
    diff = C[:, None, :] - C[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=2))
    k = C.shape[0]
    if k < 2:
        min_off = None
    else:
        mask = ~np.eye(k, dtype=bool)
        min_off = float(d[mask].min())
    return CenterDistanceMatrix(distances=d, min_off_diagonal=min_off)


def variance_form_wcss(matrix, solution: ClusterSolution) -> float:
    """Objective recomputed as the size-weighted sum of per-cluster
    population variances; must agree with the squared-distance form."""
    X, row_ids = _matrix_values(matrix)
    if row_ids != solution.row_ids:
        raise ValidationError("solution does not belong to this matrix")
    labels = solution.labels
    total = 0.0
    for c in range(solution.k):
        members = X[labels == c]
        if members.shape[0]:
            total += members.shape[0] * float(
                np.var(members, axis=0, ddof=0).sum()
            )
    return total


class KMeansClusterer(ClusterMixin, BaseEstimator):
    """Seeded Lloyd clustering with the usual fit/predict surface."""

    def __init__(self, n_clusters: int = 5, random_state: int = 42,
                 max_iter: int = 100):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        solution = lloyd(
            X, self.n_clusters, seed=self.random_state, max_iter=self.max_iter
        )
        self.solution_ = solution
        self.cluster_centers_ = solution.centroids
        self.labels_ = solution.labels
        self.inertia_ = solution.wcss
        self.n_iter_ = solution.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError("KMeansClusterer is not fitted yet")
        return assign(X, self.cluster_centers_)
