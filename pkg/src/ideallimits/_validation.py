"""Input checks shared by the estimators and functional entry points."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_sequence(X) -> np.ndarray:
    """Coerce a 1-D (or single-column) array-like of finite reals to float64."""
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    arr = check_array(arr, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sequence of values, got shape {arr.shape}")
    return arr


def check_eps_schedule(eps_schedule) -> tuple:
    eps = tuple(float(e) for e in eps_schedule)
    if not eps:
        raise ValueError("eps schedule is empty")
    if any(e <= 0 for e in eps):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    return eps
