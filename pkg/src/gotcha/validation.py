"""Input validation helpers for attribute, relevance, and feature arrays."""

from __future__ import annotations

import math

import numpy as np

from .errors import InputShapeError


def as_attribute_vector(values, n_attrs: int | None = None) -> np.ndarray:
    """Coerce to an int8 vector of signed units, checking every entry is ±1."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InputShapeError(f"attribute vector must be 1-d, got shape {arr.shape}")
    if n_attrs is not None and arr.shape[0] != n_attrs:
        raise InputShapeError(
            f"attribute vector has length {arr.shape[0]}, expected {n_attrs}"
        )
    out = arr.astype(np.int8, copy=False)
    if not np.array_equal(out, arr):
        raise InputShapeError("attributes must be integer -1 or +1")
    if not np.all(np.abs(out) == 1):
        raise InputShapeError("attributes must be ±1")
    return out


def as_relevance_vector(values, n_attrs: int | None = None) -> np.ndarray:
    """Coerce to an int8 vector with entries in {-1, 0, +1}."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InputShapeError(f"relevance vector must be 1-d, got shape {arr.shape}")
    if n_attrs is not None and arr.shape[0] != n_attrs:
        raise InputShapeError(
            f"relevance vector has length {arr.shape[0]}, expected {n_attrs}"
        )
    out = arr.astype(np.int8, copy=False)
    if not np.array_equal(out, arr):
        raise InputShapeError("relevance entries must be integer -1, 0, or +1")
    if not np.all(np.abs(out) <= 1):
        raise InputShapeError("relevance entries must be in {-1, 0, +1}")
    return out


def as_feature_vector(values, n_features: int | None = None, dtype=np.float32) -> np.ndarray:
    """Coerce to a finite float vector of the configured length."""
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 1:
        raise InputShapeError(f"feature vector must be 1-d, got shape {arr.shape}")
    if n_features is not None and arr.shape[0] != n_features:
        raise InputShapeError(
            f"feature vector has length {arr.shape[0]}, expected {n_features}"
        )
    if not np.all(np.isfinite(arr)):
        raise InputShapeError("feature vector contains non-finite entries")
    return arr


def check_same_length(a: np.ndarray, b: np.ndarray, what: str = "vectors") -> None:
    if a.shape[0] != b.shape[0]:
        raise InputShapeError(
            f"{what} have mismatched lengths {a.shape[0]} and {b.shape[0]}"
        )


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero (x >= 0 assumed)."""
    return int(math.floor(x + 0.5))
