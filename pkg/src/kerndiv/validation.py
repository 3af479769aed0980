"""Input validation helpers used throughout the public API."""

from __future__ import annotations

import numpy as np

from .exceptions import InputError


def as_float_matrix(data, name: str = "data") -> np.ndarray:
    """Coerce to a finite 2-d float array with at least one row and column.

    1-d input is treated as a column of scalar samples.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise InputError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_samples(obj, name: str = "sample set") -> np.ndarray:
    """Extract the (n, d) data matrix from a sample set or array-like."""
    return as_float_matrix(getattr(obj, "data", obj), name)


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise InputError(
            f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )


def check_square_distances(values, tol: float = 1e-9) -> np.ndarray:
    """Validate a precomputed matrix of pairwise divergences.

    Requires a finite square matrix, symmetric within ``tol``, with diagonal
    entries no larger than ``tol`` and no entry below ``-tol``.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("distance matrix contains non-finite entries")
    asym = np.abs(arr - arr.T).max() if arr.size else 0.0
    if asym > tol:
        raise InputError(f"distance matrix is asymmetric (max deviation {asym:.3e})")
    if arr.size and np.abs(np.diagonal(arr)).max() > tol:
        raise InputError("distance matrix has a nonzero diagonal")
    if arr.size and arr.min() < -tol:
        raise InputError(f"distance matrix has negative entries (min {arr.min():.3e})")
    return arr
