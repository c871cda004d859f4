"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import InvalidInputError


def check_point(x, dim=None, *, name="x", allow_nonfinite=False) -> np.ndarray:
    """Return ``x`` as a fresh 1-D float64 array, validating shape and finiteness."""
    try:
        arr = np.array(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not numeric: {exc}") from None
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not allow_nonfinite and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def check_matrix(M, shape=None, *, name="M") -> np.ndarray:
    try:
        arr = np.array(M, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not numeric: {exc}") from None
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if shape is not None:
        for want, got in zip(shape, arr.shape):
            if want is not None and want != got:
                raise InvalidInputError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def check_symmetric(M, *, name="M", rtol=1e-12) -> np.ndarray:
    arr = check_matrix(M, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > rtol * scale:
        raise InvalidInputError(f"{name} is not symmetric")
    return arr


def check_scalar(value, name, *, lower=None, upper=None, lower_inclusive=True,
                 upper_inclusive=True) -> float:
    """Validate a real scalar against optional bounds and return it as float."""
    if isinstance(value, bool) or not isinstance(value, (numbers.Real, np.floating, np.integer)):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value}")
    if lower is not None:
        bad = value < lower if lower_inclusive else value <= lower
        if bad:
            op = ">=" if lower_inclusive else ">"
            raise InvalidInputError(f"{name} must be {op} {lower}, got {value}")
    if upper is not None:
        bad = value > upper if upper_inclusive else value >= upper
        if bad:
            op = "<=" if upper_inclusive else "<"
            raise InvalidInputError(f"{name} must be {op} {upper}, got {value}")
    return value


def check_samples(samples, dim, *, name="samples") -> np.ndarray:
    """Stack sample points into an ``(n_points, dim)`` array."""
    arr = np.array(samples, dtype=np.float64)
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InvalidInputError(f"{name} must have shape (n, {dim}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr
