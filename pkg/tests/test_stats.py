import math
import random

import numpy as np
import pytest

from mcdakit.errors import (
    DegenerateDesign,
    DimsTooLarge,
    InvalidDegrees,
    NonPermutation,
    RaterCountTooSmall,
)
from mcdakit.model import CriterionId, RatingMatrix
from mcdakit.stats import (
    PrincipalComponents,
    anova,
    concordance_report,
    descriptive_stats,
    f_significance,
    jacobi_eigh,
    kendalls_w,
    pca_project,
)

from oracles import (
    f_upper_tail_series,
    power_iteration_eigs,
    two_pass_mean_std,
)


def matrix_from_columns(cols: dict[str, list[float]]) -> RatingMatrix:
    criteria = [CriterionId(code) for code in cols]
    values = np.column_stack([cols[c.code] for c in criteria])
    return RatingMatrix(range(1, values.shape[0] + 1), criteria, values)


class TestDescriptiveStats:
    def test_min_max_of_two_level_column(self):
        # thirteen 8s and seven 9s
        col = [8.0] * 13 + [9.0] * 7
        (row,) = descriptive_stats(matrix_from_columns({"PLCY": col}))
        assert row.n == 20
        assert row.min == 8.0
        assert row.max == 9.0
        assert row.mean == pytest.approx(8.35, abs=1e-12)
        assert row.std == pytest.approx(0.489, abs=5e-4)

    def test_single_value_column_has_zero_std(self):
        (row,) = descriptive_stats(matrix_from_columns({"X": [5.0]}))
        assert row.mean == 5.0
        assert row.std == 0.0

    def test_two_point_column(self):
        (row,) = descriptive_stats(matrix_from_columns({"X": [8.0, 10.0]}))
        assert row.mean == pytest.approx(9.0)
        assert row.std == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_agrees_with_two_pass_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            col = rng.uniform(1, 10, size=n)
            (row,) = descriptive_stats(matrix_from_columns({"X": list(col)}))
            mean, std = two_pass_mean_std(col)
            assert row.mean == pytest.approx(mean, abs=1e-12)
            assert row.std == pytest.approx(std, abs=1e-12)


class TestAnova:
    def test_zero_within_variance_gives_infinite_f(self):
        mx = matrix_from_columns({"X": [1.0, 1.0, 10.0, 10.0]})
        (row,) = anova(mx, [0, 0, 1, 1])
        assert row.error_ms == 0.0
        assert math.isinf(row.f_stat)
        assert row.significance == 0.0

    def test_identical_points_give_zero_f(self):
        mx = matrix_from_columns({"X": [4.0, 4.0, 4.0, 4.0]})
        (row,) = anova(mx, [0, 0, 1, 1])
        assert row.f_stat == 0.0
        assert row.significance == 1.0

    def test_f_ratio_magnitude(self):
        # mean-square ratio 22.438 / 0.0533 lands within 2% of 420.7
        assert 22.438 / 0.0533 == pytest.approx(420.7, rel=0.02)

    def test_sum_of_squares_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(6, 25))
            k = int(rng.integers(2, min(5, n - 1) + 1))
            values = rng.uniform(1, 10, size=(n, 2))
            labels = rng.integers(0, k, size=n)
            labels[:k] = np.arange(k)  # every cluster non-empty
            mx = RatingMatrix(
                range(1, n + 1), [CriterionId("A"), CriterionId("B")], values
            )
            for row, col in zip(anova(mx, labels), values.T):
                total_ss = float(((col - col.mean()) ** 2).sum())
                recovered = (
                    row.cluster_df * row.cluster_ms
                    + row.error_df * row.error_ms
                )
                assert recovered == pytest.approx(total_ss, rel=1e-9)
                assert row.cluster_df + row.error_df == n - 1

    def test_degenerate_designs_rejected(self):
        mx = matrix_from_columns({"X": [1.0, 2.0, 3.0]})
        with pytest.raises(DegenerateDesign):
            anova(mx, [0, 0, 0])
        with pytest.raises(DegenerateDesign):
            anova(mx, [0, 1, 2])


class TestFSignificance:
    def test_zero_statistic_has_full_tail(self):
        assert f_significance(0.0, 4, 15) == 1.0

    def test_equal_dfs_at_one_is_half(self):
        for df in (1, 2, 5, 10, 30):
            assert f_significance(1.0, df, df) == pytest.approx(0.5, abs=1e-10)

    def test_large_statistic_is_tiny(self):
        assert f_significance(42.96, 4, 15) < 1e-7

    def test_monotone_in_f(self):
        grid = [0.0, 0.3, 1.0, 2.5, 7.0, 20.0, 100.0]
        values = [f_significance(f, 4, 15) for f in grid]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_matches_series_oracle_on_grid(self):
        points = [
            (0.5, 1, 1), (1.5, 1, 8), (2.5, 2, 4), (0.1, 2, 12),
            (3.7, 3, 9), (9.0, 3, 3), (0.8, 4, 15), (4.2, 4, 15),
            (42.96, 4, 15), (163.8, 4, 15), (1.0, 5, 5), (2.2, 5, 20),
            (11.0, 6, 6), (0.05, 7, 3), (6.5, 8, 24), (1.3, 9, 9),
            (2.8, 10, 40), (17.58, 4, 15), (420.7, 4, 15), (0.33, 12, 2),
        ]
        for f, d1, d2 in points:
            assert f_significance(f, d1, d2) == pytest.approx(
                f_upper_tail_series(f, d1, d2), abs=1e-8
            )

    def test_invalid_degrees(self):
        with pytest.raises(InvalidDegrees):
            f_significance(1.0, 0, 5)
        with pytest.raises(InvalidDegrees):
            f_significance(1.0, 4, -1)


class TestKendallsW:
    def test_perfect_agreement(self):
        assert kendalls_w([(1, 2, 3), (1, 2, 3)]) == 1.0

    def test_reversed_pair(self):
        assert kendalls_w([(1, 2, 3), (3, 2, 1)]) == 0.0

    def test_rater_count(self):
        with pytest.raises(RaterCountTooSmall):
            kendalls_w([(1, 2, 3)])

    def test_non_permutation(self):
        with pytest.raises(NonPermutation):
            kendalls_w([(1, 2, 2), (1, 2, 3)])

    def test_relabeling_invariance(self):
        rng = random.Random(23)
        for _ in range(50):
            m = rng.randint(2, 6)
            n = rng.randint(2, 7)
            rankings = [rng.sample(range(1, n + 1), n) for _ in range(m)]
            w = kendalls_w(rankings)
            perm = rng.sample(range(n), n)
            relabeled = [[row[j] for j in perm] for row in rankings]
            assert kendalls_w(relabeled) == w
            rows = rng.sample(range(m), m)
            assert kendalls_w([rankings[i] for i in rows]) == w

    def test_range_on_random_panels(self):
        rng = random.Random(4)
        for _ in range(20):
            rankings = [rng.sample(range(1, 6), 5) for _ in range(4)]
            assert 0.0 <= kendalls_w(rankings) <= 1.0

    def test_fixture_concordance(self, bundled_profiles):
        report = concordance_report(bundled_profiles)
        assert set(report.per_criterion_w) == {"Ease", "Efficacy", "Cost"}
        for w in report.per_criterion_w.values():
            assert 0.0 <= w <= 1.0
        assert 0.0 <= report.among_criteria_w <= 1.0
        # frozen from the bundled panel
        assert report.per_criterion_w["Ease"] == pytest.approx(0.7387755102040816)
        assert report.per_criterion_w["Efficacy"] == pytest.approx(0.6285714285714286)
        assert report.per_criterion_w["Cost"] == pytest.approx(0.6979591836734694)
        assert report.among_criteria_w == pytest.approx(0.9111111111111111)


class TestJacobiAndPca:
    def test_eigendecomposition_matches_lapack(self):
        rng = np.random.default_rng(31)
        for d in (2, 3, 5, 7):
            M = rng.normal(size=(d, d))
            S = M @ M.T
            vals, vecs = jacobi_eigh(S)
            ref = np.sort(np.linalg.eigvalsh(S))[::-1]
            assert np.allclose(vals, ref, atol=1e-10)
            # columns are orthonormal eigenvectors
            assert np.allclose(vecs.T @ vecs, np.eye(d), atol=1e-10)
            assert np.allclose(S @ vecs, vecs * vals, atol=1e-8)

    def test_sign_convention(self):
        S = np.diag([3.0, 1.0])
        _, vecs = jacobi_eigh(S)
        for j in range(2):
            lead = np.argmax(np.abs(vecs[:, j]))
            assert vecs[lead, j] > 0

    def test_collinear_points_keep_distances(self):
        t = np.array([0.0, 1.0, 2.5, 4.0])
        X = np.column_stack([3 * t, 4 * t])
        Y = pca_project(X, 1)
        for i in range(len(t)):
            for j in range(len(t)):
                orig = np.linalg.norm(X[i] - X[j])
                assert abs(Y[i, 0] - Y[j, 0]) == pytest.approx(orig, abs=1e-9)

    def test_full_dimension_preserves_variance(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(1, 10, size=(12, 4))
        Y = pca_project(X, 4)
        var_x = float(((X - X.mean(axis=0)) ** 2).sum())
        var_y = float((Y ** 2).sum())
        assert var_y == pytest.approx(var_x, rel=1e-9)

    def test_explained_variance_matches_power_iteration(self, bundled_matrix):
        est = PrincipalComponents(n_components=2).fit(bundled_matrix.values)
        X = bundled_matrix.values
        cov = np.cov(X, rowvar=False)
        top = power_iteration_eigs(cov, 2)
        total = float(np.trace(cov))
        for got, expect in zip(est.explained_variance_ratio_, top / total):
            assert got == pytest.approx(expect, abs=1e-8)

    def test_dims_too_large(self, bundled_matrix):
        with pytest.raises(DimsTooLarge):
            pca_project(bundled_matrix, 6)

    def test_transformer_matches_function(self, bundled_matrix):
        X = bundled_matrix.values
        est = PrincipalComponents(n_components=3).fit(X)
        assert np.allclose(est.transform(X), pca_project(X, 3), atol=1e-12)

    def test_estimator_params_round_trip(self):
        from sklearn.base import clone

        est = PrincipalComponents(n_components=3)
        assert clone(est).get_params() == {"n_components": 3}
