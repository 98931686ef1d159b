from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_prefixes(prefixes, k: int) -> np.ndarray:
    """2-D float array of level-``k`` path prefixes, each starting at 0."""
    p = check_array(prefixes, dtype=np.float64, ensure_2d=False)
    p = np.atleast_2d(p)
    if p.shape[1] != k + 1:
        raise ValueError(f"level-{k} prefixes need {k + 1} columns, got {p.shape[1]}")
    if np.any(p[:, 0] != 0):
        raise ValueError("paths start at 0")
    return p


def check_points(x) -> np.ndarray:
    return check_array(np.reshape(np.asarray(x, dtype=float), (-1, 1)), dtype=np.float64).ravel()


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
