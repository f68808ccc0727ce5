"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ValidationError


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_float_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_same_width(points: np.ndarray, centers: np.ndarray) -> None:
    if points.shape[1] != centers.shape[1]:
        raise DimensionMismatch(
            f"points have {points.shape[1]} columns, centers have {centers.shape[1]}"
        )
