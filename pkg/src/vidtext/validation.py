"""Input validation helpers.

Small checkers used at module boundaries; they raise ContractViolation with
messages naming the offending argument so pipeline failures are attributable.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation


def as_float_vector(values, name: str = "values") -> np.ndarray:
    """Coerce to a 1-D float32 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def check_finite_matrix(scores, name: str = "scores") -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name: str) -> float:
    if not (value > 0):
        raise ContractViolation(f"{name} must be > 0, got {value!r}")
    return float(value)


def check_positive_int(value, name: str) -> int:
    if int(value) != value or value < 1:
        raise ContractViolation(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_layer_index(layer, num_layers: int) -> int:
    if int(layer) != layer or layer < 0 or layer >= num_layers:
        raise ContractViolation(
            f"layer {layer!r} out of range for backend with {num_layers} layers"
        )
    return int(layer)
