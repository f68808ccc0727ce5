import itertools

import numpy as np
import pytest

from mcdakit.errors import DimensionMismatch, KTooLarge, ValidationError
from mcdakit.kmeans import (
    KMeansClusterer,
    assign,
    center_distances,
    init_centroids,
    lloyd,
    update_centroids,
    variance_form_wcss,
)

from oracles import brute_force_best_wcss


class TestInitCentroids:
    def test_k_equals_n_selects_every_row(self):
        X = np.arange(12.0).reshape(6, 2)
        centers = init_centroids(X, 6, seed=0)
        assert sorted(map(tuple, centers)) == sorted(map(tuple, X))

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            init_centroids(np.ones((3, 2)), 4, seed=0)

    def test_same_seed_same_draw(self, bundled_matrix):
        a = init_centroids(bundled_matrix, 5, seed=42)
        b = init_centroids(bundled_matrix, 5, seed=42)
        assert np.array_equal(a, b)

    def test_seed_42_draw_is_frozen(self, bundled_matrix):
        centers = init_centroids(bundled_matrix, 5, seed=42)
        # row indices 13, 8, 11, 1, 19 hold concepts 14, 9, 12, 2, 20
        expected = bundled_matrix.values[[13, 8, 11, 1, 19]]
        assert np.array_equal(centers, expected)

    def test_seeds_give_distinct_selections(self, bundled_matrix):
        draws = set()
        for seed in range(100):
            centers = init_centroids(bundled_matrix, 5, seed=seed)
            draws.add(tuple(map(tuple, centers)))
        assert len(draws) >= 95


class TestAssign:
    CENTERS = np.array([[0.0, 0.0], [5.0, 0.0], [9.0, 9.0]])

    def test_point_on_centroid(self):
        labels = assign(np.array([[9.0, 9.0]]), self.CENTERS)
        assert labels[0] == 2

    def test_tie_breaks_to_lowest_index(self):
        labels = assign(np.array([[2.5, 0.0]]), self.CENTERS)
        assert labels[0] == 0

    def test_matches_exhaustive_nearest_scan(self):
        rng = np.random.default_rng(77)
        X = rng.uniform(0, 10, size=(40, 3))
        C = rng.uniform(0, 10, size=(4, 3))
        labels = assign(X, C)
        for i, x in enumerate(X):
            dists = [float(((x - c) ** 2).sum()) for c in C]
            assert dists[labels[i]] == min(dists)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            assign(np.ones((2, 3)), np.ones((2, 2)))


class TestUpdateCentroids:
    def test_two_point_mean(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0]])
        centers = update_centroids(X, [0, 0], 1)
        assert np.array_equal(centers, [[0.0, 0.5]])

    def test_singleton_cluster(self):
        X = np.array([[2.0, 3.0], [8.0, 9.0]])
        centers = update_centroids(X, [0, 1], 2)
        assert np.array_equal(centers, X)

    def test_empty_cluster_reseeded_with_farthest_point(self):
        X = np.array([[0.0], [1.0], [10.0]])
        # nobody is assigned to cluster 1; the farthest point from its own
        # centroid is the 10 sitting far from mean(0, 1, 10)
        centers = update_centroids(X, [0, 0, 0], 2)
        assert centers[1][0] == 10.0

    def test_reseed_does_not_increase_objective(self):
        # duplicate initial rows force an empty cluster on the first update
        X = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 6.0]])
        solution = lloyd(X, 2, max_iter=50,
                         initial_centers=[[0.0, 0.0], [0.0, 0.0]])
        traj = solution.wcss_trajectory
        assert all(a >= b - 1e-12 for a, b in zip(traj, traj[1:]))
        assert len(set(solution.assignments.values())) == 2


class TestLloyd:
    def test_two_cluster_example(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
        sol = lloyd(X, 2, initial_centers=[[0.0, 0.0], [10.0, 10.0]])
        assert sol.assignments == {1: 1, 2: 1, 3: 2, 4: 2}
        assert np.array_equal(sol.centroids, [[0.0, 0.5], [10.0, 10.5]])
        assert sol.wcss == 1.0

    def test_k_equals_n_reaches_zero(self):
        X = np.array([[1.0], [2.0], [3.0]])
        sol = lloyd(X, 3, seed=9)
        assert sol.wcss == 0.0

    def test_determinism(self, bundled_matrix):
        a = lloyd(bundled_matrix, 5, seed=42)
        b = lloyd(bundled_matrix, 5, seed=42)
        assert a.assignments == b.assignments
        assert np.array_equal(a.centroids, b.centroids)
        assert a.wcss == b.wcss
        assert a.wcss_trajectory == b.wcss_trajectory
        assert a.iterations == b.iterations

    def test_assignment_is_fixed_point_at_convergence(self, bundled_matrix):
        sol = lloyd(bundled_matrix, 5, seed=42)
        again = assign(bundled_matrix.values, sol.centroids)
        assert np.array_equal(again, sol.labels)

    def test_trajectory_non_increasing_across_seeds(self, bundled_matrix):
        for seed in range(25):
            traj = lloyd(bundled_matrix, 5, seed=seed).wcss_trajectory
            assert all(a >= b - 1e-12 for a, b in zip(traj, traj[1:]))

    def test_bundled_fixture_golden(self, bundled_matrix):
        sol = lloyd(bundled_matrix, 5, seed=42)
        assert sol.iterations == 2
        assert sol.wcss == pytest.approx(7.7234693877551015, abs=1e-12)
        assert sol.members(1) == (14, 16, 17, 19)
        assert sol.members(2) == (9, 10, 13, 18)
        assert sol.members(3) == (11, 12)
        assert sol.members(4) == (2, 3, 4, 5, 7)
        assert sol.members(5) == (1, 6, 8, 15, 20)

    def test_k_too_large_surfaces(self, bundled_matrix):
        with pytest.raises(KTooLarge):
            lloyd(bundled_matrix, 25, seed=1)

    def test_bad_max_iter(self, bundled_matrix):
        with pytest.raises(ValidationError):
            lloyd(bundled_matrix, 5, seed=1, max_iter=0)


class TestDeskScaleOptimality:
    def _datasets(self):
        rng = np.random.default_rng(2024)
        sets = [
            np.array([[0.0], [1.0], [9.0], [10.0], [20.0]]),
            np.array([[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [6.0, 5.0],
                      [0.0, 6.0], [1.0, 6.0]]),
        ]
        for _ in range(4):
            n = int(rng.integers(5, 9))
            d = int(rng.integers(1, 4))
            sets.append(rng.integers(0, 8, size=(n, d)).astype(float))
        return sets

    def test_best_initialization_matches_brute_force(self):
        for X in self._datasets():
            n = X.shape[0]
            oracle = brute_force_best_wcss(X)
            for k in (2, 3):
                if k > n:
                    continue
                best = np.inf
                for subset in itertools.combinations(range(n), k):
                    sol = lloyd(X, k, initial_centers=X[list(subset)])
                    best = min(best, sol.wcss)
                assert best == oracle[k]


class TestObjectiveForms:
    def test_singleton_clusters_have_zero_variance_form(self):
        X = np.array([[1.0], [5.0], [9.0]])
        sol = lloyd(X, 3, seed=3)
        assert variance_form_wcss(X, sol) == 0.0

    def test_two_point_identity(self):
        X = np.array([[0.0], [2.0]])
        sol = lloyd(X, 1, seed=0)
        assert variance_form_wcss(X, sol) == pytest.approx(2.0, abs=1e-12)
        assert sol.wcss == pytest.approx(2.0, abs=1e-12)

    def test_forms_agree_on_random_instances(self):
        rng = np.random.default_rng(55)
        for _ in range(50):
            n = int(rng.integers(4, 30))
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, min(n, 6) + 1))
            X = rng.uniform(0, 10, size=(n, d))
            sol = lloyd(X, k, seed=int(rng.integers(1000)))
            assert variance_form_wcss(X, sol) == pytest.approx(
                sol.wcss, rel=1e-9, abs=1e-12
            )

    def test_forms_agree_on_fixture(self, bundled_matrix):
        sol = lloyd(bundled_matrix, 5, seed=42)
        assert variance_form_wcss(bundled_matrix, sol) == pytest.approx(
            sol.wcss, rel=1e-9
        )


class TestCenterDistances:
    def test_three_four_five_triangle(self):
        cd = center_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert cd.distances[0, 1] == 5.0
        assert cd.min_off_diagonal == 5.0

    def test_identical_centers(self):
        cd = center_distances(np.array([[2.0, 2.0], [2.0, 2.0]]))
        assert cd.distances[0, 1] == 0.0

    def test_symmetry_and_min_scan(self, bundled_matrix):
        sol = lloyd(bundled_matrix, 5, seed=42)
        cd = center_distances(sol.centroids)
        d = cd.distances
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0.0)
        k = d.shape[0]
        off = [d[i, j] for i in range(k) for j in range(k) if i != j]
        assert cd.min_off_diagonal == min(off)
        # triangle inequality
        for i in range(k):
            for j in range(k):
                for l in range(k):
                    assert d[i, j] <= d[i, l] + d[l, j] + 1e-9


def test_estimator_surface(bundled_matrix):
    from sklearn.base import clone

    est = KMeansClusterer(n_clusters=5, random_state=42)
    assert clone(est).get_params() == {
        "n_clusters": 5, "random_state": 42, "max_iter": 100,
    }
    labels = est.fit_predict(bundled_matrix.values)
    assert np.array_equal(labels, est.labels_)
    assert est.inertia_ == pytest.approx(7.7234693877551015, abs=1e-12)
    assert np.array_equal(
        est.predict(bundled_matrix.values), est.labels_
    )
