"""Input validation helpers.

These play the role of ``sklearn.utils.check_array`` for the objects used
throughout the package: every public entry point funnels user input through
one of them so that downstream code can assume finite complex ndarrays of
consistent shape.
"""

import numpy as np

from .exceptions import DimensionError


def check_vector(v, dim=None, name="vector"):
    """Return ``v`` as a finite 1-D complex array, optionally of length ``dim``."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    arr = arr.astype(complex, copy=True)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if arr.shape[0] == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_operator(A, dim=None, name="operator"):
    """Return ``A`` as a finite square complex matrix."""
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    arr = arr.astype(complex, copy=True)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} acts on dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_rows(M, n_cols=None, name="matrix", min_rows=1):
    """Return ``M`` as a finite 2-D complex array with at least ``min_rows`` rows."""
    arr = np.asarray(M)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    arr = arr.astype(complex, copy=True)
    if arr.shape[0] < min_rows:
        raise DimensionError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise DimensionError(f"{name} has {arr.shape[1]} columns, expected {n_cols}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_positive(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {x}")
    return x


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def frozen(arr):
    """Mark an array read-only so containers holding it stay immutable."""
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr
