"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
import pandas as pd


def as_float_matrix(X, n_rows=None):
    """Coerce ``X`` to a 2-D float array, returning ``(matrix, column_names)``.

    Accepts a pandas DataFrame (column names preserved), a 1-D vector
    (treated as a single column) or a 2-D array (columns named x0, x1, ...).
    """
    if isinstance(X, pd.DataFrame):
        names = [str(c) for c in X.columns]
        mat = X.to_numpy(dtype=float)
    else:
        mat = np.asarray(X, dtype=float)
        if mat.ndim == 1:
            mat = mat[:, None]
        if mat.ndim != 2:
            raise ValueError(f"X must be 1-D or 2-D, got ndim={mat.ndim}")
        names = [f"x{j}" for j in range(mat.shape[1])]
    if n_rows is not None and mat.shape[0] != n_rows:
        raise ValueError(f"X has {mat.shape[0]} rows, expected {n_rows}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("X contains non-finite values")
    return mat, names


def as_float_vector(y, name="y", n_rows=None):
    vec = np.asarray(y, dtype=float).ravel()
    if n_rows is not None and vec.shape[0] != n_rows:
        raise ValueError(f"{name} has {vec.shape[0]} rows, expected {n_rows}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} contains non-finite values")
    return vec


def check_binary(values, name="values"):
    """Validate a 0/1 indicator and return it as a float vector."""
    vec = np.asarray(values, dtype=float).ravel()
    uniq = np.unique(vec)
    if not np.all(np.isin(uniq, (0.0, 1.0))):
        raise ValueError(f"{name} must be binary 0/1, found values {uniq[:5]}")
    return vec


def group_codes(values, name="groups"):
    """Encode arbitrary group labels as contiguous integer codes."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    codes, _ = pd.factorize(arr, sort=True)
    return codes
