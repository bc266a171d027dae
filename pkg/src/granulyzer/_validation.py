"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length


def check_ranks(X) -> np.ndarray:
    """Accept rank counts as shape (n,) or (n, 1); return a 1-D float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of rank counts, got shape {arr.shape}")
        arr = arr[:, 0]
    arr = check_array(arr.reshape(-1, 1), ensure_min_samples=1).ravel()
    if np.any(arr < 1):
        raise ValueError("rank counts must be >= 1")
    return arr


def check_timings(X, y, n_columns: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    P = check_ranks(X)
    y = np.asarray(y, dtype=float)
    if n_columns is None:
        y = check_array(y.reshape(-1, 1), ensure_min_samples=1).ravel()
    else:
        y = check_array(y.reshape(len(y), -1), ensure_min_samples=1)
        if y.shape[1] != n_columns:
            raise ValueError(f"expected {n_columns} timing columns, got {y.shape[1]}")
    check_consistent_length(P, y)
    if np.any(y < 0):
        raise ValueError("timings must be non-negative")
    return P, y


def check_ascending(ranks) -> list[int]:
    ranks = [int(p) for p in ranks]
    if not ranks:
        raise ValueError("rank list is empty")
    if ranks[0] < 1 or any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ValueError(f"ranks must be positive and strictly ascending, got {ranks}")
    return ranks
