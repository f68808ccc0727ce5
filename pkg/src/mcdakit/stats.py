"""Descriptive statistics, one-way ANOVA over cluster labels, the F upper
tail, Kendall's coefficient of concordance, and a small-matrix PCA.

The F tail is computed through the regularized incomplete beta function
(continued fraction, modified Lentz). The PCA eigensolver is a cyclic Jacobi
rotation scheme: the covariance matrices here are tiny symmetric matrices,
where Jacobi is simple and provably convergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import (
    DegenerateDesign,
    DimsTooLarge,
    EmptyMatrix,
    InvalidDegrees,
    NonPermutation,
    NumericalError,
    RaterCountTooSmall,
    ValidationError,
)
from .model import CriterionId, RankProfile, RatingMatrix
from .validation import as_float_matrix

JACOBI_TOL = 1e-12
_BETACF_EPS = 3e-16
_BETACF_MAX_ITER = 500
_FPMIN = 1e-300


@dataclass(frozen=True)
class DescriptiveRow:
    criterion: CriterionId
    n: int
    min: float
    max: float
    mean: float
    std: float  # sample (n-1) denominator; 0 for a single value


@dataclass(frozen=True)
class AnovaRow:
    criterion: CriterionId
    cluster_ms: float
    cluster_df: int
    error_ms: float
    error_df: int
    f_stat: float  # +inf when the within-group variance is zero
    significance: float


@dataclass(frozen=True)
class ConcordanceReport:
    per_criterion_w: dict[str, float]
    among_criteria_w: float | None


def descriptive_stats(matrix: RatingMatrix) -> list[DescriptiveRow]:
    """One row per criterion column: n, min, max, mean, sample std."""
    if matrix.values.size == 0:
        raise EmptyMatrix("rating matrix has no cells")
    rows = []
    for j, crit in enumerate(matrix.criteria):
        col = matrix.values[:, j]
        n = col.size
        std = float(np.std(col, ddof=1)) if n > 1 else 0.0
        rows.append(
            DescriptiveRow(
                criterion=crit,
                n=n,
                min=float(col.min()),
                max=float(col.max()),
                mean=float(col.mean()),
                std=std,
            )
        )
    return rows


def anova(matrix: RatingMatrix, assignments) -> list[AnovaRow]:
    """Per-criterion one-way ANOVA of the cluster partition.

    ``assignments`` holds one cluster label per matrix row. A zero
    within-group mean square is reported as an infinite F with significance
    zero; a zero between-group mean square as F = 0.
    """
    labels = np.asarray(assignments)
    n = matrix.values.shape[0]
    if labels.shape != (n,):
        raise ValidationError(
            f"assignments length {labels.size} does not match {n} matrix rows"
        )
    groups = [np.where(labels == g)[0] for g in np.unique(labels)]
    k = len(groups)
    if k < 2 or n <= k:
        raise DegenerateDesign(
            f"need at least 2 clusters and more points than clusters "
            f"(n={n}, k={k})"
        )
    rows = []
    for j, crit in enumerate(matrix.criteria):
        col = matrix.values[:, j]
        grand = col.mean()
        ss_between = sum(len(g) * (col[g].mean() - grand) ** 2 for g in groups)
        ss_within = sum(((col[g] - col[g].mean()) ** 2).sum() for g in groups)
        ms_between = ss_between / (k - 1)
        ms_within = ss_within / (n - k)
        scale = max(1.0, ss_between + ss_within)
        if ms_between <= 1e-12 * scale:
            f_stat, sig = 0.0, 1.0
        elif ms_within <= 1e-12 * scale:
            f_stat, sig = math.inf, 0.0
        else:
            f_stat = ms_between / ms_within
            sig = f_significance(f_stat, k - 1, n - k)
        rows.append(
            AnovaRow(
                criterion=crit,
                cluster_ms=float(ms_between),
                cluster_df=k - 1,
                error_ms=float(ms_within),
                error_df=n - k,
                f_stat=float(f_stat),
                significance=float(sig),
            )
        )
    return rows


def f_significance(f: float, df1: int, df2: int) -> float:
    """Upper-tail probability P(F(df1, df2) > f).

    Computed as the regularized incomplete beta I_x(df2/2, df1/2) at
    x = df2 / (df2 + df1 * f); absolute error is around 1e-14, well inside
    the 1e-10 contract.
    """
    if int(df1) != df1 or int(df2) != df2 or df1 < 1 or df2 < 1:
        raise InvalidDegrees(f"degrees of freedom must be integers >= 1, "
                             f"got ({df1}, {df2})")
    if not f >= 0:
        raise ValidationError(f"f statistic must be >= 0, got {f}")
    if math.isinf(f):
        return 0.0
    x = df2 / (df2 + df1 * f)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) by the symmetric continued-fraction expansion."""
    if a <= 0 or b <= 0:
        raise ValidationError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the continued fraction converges fastest below the distribution mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise NumericalError(
        f"incomplete beta continued fraction did not converge "
        f"(a={a}, b={b}, x={x})"
    )


def kendalls_w(rankings: Sequence[Sequence[int]]) -> float:
    """Kendall's coefficient of concordance for complete, untied rankings.

    ``rankings[i][j]`` is the rank rater i gives item j; each row must be a
    permutation of 1..n. Returns W = 12 S / (m^2 (n^3 - n)) in [0, 1].
    """
    rows = [list(r) for r in rankings]
    m = len(rows)
    if m < 2:
        raise RaterCountTooSmall(f"need at least 2 raters, got {m}")
    n = len(rows[0])
    if n < 2:
        raise ValidationError("need at least 2 ranked items")
    for i, row in enumerate(rows):
        if sorted(row) != list(range(1, n + 1)):
            raise NonPermutation(
                f"ranking {i} is not a permutation of 1..{n}: {row}"
            )
    # exact integer arithmetic until the final division
    rank_sums = [sum(row[j] for row in rows) for j in range(n)]
    twice_mean = m * (n + 1)  # 2 * mean rank sum
    four_s = sum((2 * r - twice_mean) ** 2 for r in rank_sums)
    return (12 * four_s) / (4 * m * m * (n ** 3 - n))


def concordance_report(profiles: Sequence[RankProfile]) -> ConcordanceReport:
    """Agreement among experts per criterion, and among the per-criterion
    consensus rankings.

    The consensus ranking of a criterion orders items by their rank sum
    across experts (ties by item id), which keeps it a strict permutation.
    """
    if len(profiles) < 2:
        raise RaterCountTooSmall(
            f"need at least 2 experts, got {len(profiles)}"
        )
    criteria = list(profiles[0].criterion_ranks)
    items = profiles[0].items
    per_criterion: dict[str, float] = {}
    consensus_rows: list[list[int]] = []
    for crit in criteria:
        rows = [
            [prof.rank_of(crit, item) for item in items] for prof in profiles
        ]
        per_criterion[crit] = kendalls_w(rows)
        sums = {item: sum(row[j] for row in rows) for j, item in enumerate(items)}
        ordered = sorted(items, key=lambda it: (sums[it], it))
        consensus_rows.append([ordered.index(item) + 1 for item in items])
    among = kendalls_w(consensus_rows) if len(criteria) >= 2 else None
    return ConcordanceReport(per_criterion_w=per_criterion,
                             among_criteria_w=among)


def jacobi_eigh(A, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below ``tol``.
    Returns eigenvalues (descending) and the matching eigenvector columns,
    each with its largest-magnitude entry made positive.
    """
    A = np.array(A, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d) or not np.allclose(A, A.T, atol=1e-12):
        raise ValidationError("matrix must be square and symmetric")
    V = np.eye(d)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(A, 1) ** 2)))
        if off < tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) < tol / (d * d):
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                A = rot.T @ A @ rot
                V = V @ rot
    else:
        raise NumericalError("Jacobi sweeps did not converge")
    eigvals = np.diag(A).copy()
    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    V = V[:, order]
    for j in range(d):
        lead = np.argmax(np.abs(V[:, j]))
        if V[lead, j] < 0:
            V[:, j] = -V[:, j]
    return eigvals, V


def pca_project(matrix, dims: int) -> np.ndarray:
    """Center columns and project rows onto the top ``dims`` principal axes."""
    X = matrix.values if isinstance(matrix, RatingMatrix) else as_float_matrix(matrix)
    n, d = X.shape
    if dims < 1 or dims > d:
        raise DimsTooLarge(f"dims={dims} outside 1..{d}")
    if n < 2:
        raise ValidationError("need at least 2 rows for a covariance")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    _, vectors = jacobi_eigh(cov)
    return centered @ vectors[:, :dims]


class PrincipalComponents(TransformerMixin, BaseEstimator):
    """Jacobi-based PCA with the usual fit/transform surface."""

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        n, d = X.shape
        if self.n_components < 1 or self.n_components > d:
            raise DimsTooLarge(f"n_components={self.n_components} outside 1..{d}")
        if n < 2:
            raise ValidationError("need at least 2 rows for a covariance")
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = centered.T @ centered / (n - 1)
        eigvals, vectors = jacobi_eigh(cov)
        eigvals = np.clip(eigvals, 0.0, None)
        self.components_ = vectors[:, : self.n_components].T
        self.explained_variance_ = eigvals[: self.n_components]
        total = float(eigvals.sum())
        self.explained_variance_ratio_ = (
            self.explained_variance_ / total if total > 0 else self.explained_variance_ * 0.0
        )
        self.n_features_in_ = d
        return self

    def transform(self, X):
        if not hasattr(self, "components_"):
            raise NotFittedError("PrincipalComponents is not fitted yet")
        X = as_float_matrix(X)
        return (X - self.mean_) @ self.components_.T
