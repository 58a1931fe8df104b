"""
Validators
==========

Common validation utilities for numeric arguments.
"""

from typing import Optional

import numpy as np

from sarmmv.core.errors import ErrorCodes, ValidationError


def validate_finite(value, field: str):
    """
    Validate that a scalar or array contains only finite values.

    Args:
        value: Scalar or array-like to check
        field: Name reported in the error

    Returns:
        The value unchanged

    Raises:
        ValidationError: If any element is NaN or infinite
    """
    if not np.all(np.isfinite(np.asarray(value))):
        raise ValidationError(
            message="Value must be finite",
            field=field,
            code=ErrorCodes.GEO_NON_FINITE,
        )
    return value


def validate_positive(value: float, field: str, allow_zero: bool = False) -> float:
    """
    Validate that a scalar is positive.

    Args:
        value: Number to check
        field: Name reported in the error
        allow_zero: Accept 0 as well

    Returns:
        The value as float

    Raises:
        ValidationError: If the value is not (strictly) positive
    """
    validate_finite(value, field)
    value = float(value)
    if value < 0 or (value == 0 and not allow_zero):
        bound = "non-negative" if allow_zero else "positive"
        raise ValidationError(message=f"Value must be {bound}", field=field)
    return value


def validate_index(index: int, size: int, field: str, one_based: bool = False) -> int:
    """
    Validate an integer index against a container size.

    Args:
        index: Index to check
        size: Number of valid entries
        field: Name reported in the error
        one_based: Index runs 1..size instead of 0..size-1

    Returns:
        The zero-based index

    Raises:
        ValidationError: If the index is out of range
    """
    zero_based = index - 1 if one_based else index
    if not 0 <= zero_based < size:
        lo, hi = (1, size) if one_based else (0, size - 1)
        raise ValidationError(
            message=f"Index {index} outside [{lo}, {hi}]",
            field=field,
            code=ErrorCodes.SCENE_INDEX_OUT_OF_RANGE,
        )
    return int(zero_based)


def validate_vector3(value, field: str) -> np.ndarray:
    """
    Validate and coerce a finite 3-vector.

    Raises:
        ValidationError: If the shape is not (3,) or entries are not finite
    """
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(
            message=f"Expected a 3-vector, got shape {arr.shape}",
            field=field,
        )
    validate_finite(arr, field)
    return arr


def validate_shape(array: np.ndarray, shape: tuple, field: str, message: Optional[str] = None) -> np.ndarray:
    """Check an array's shape, ``None`` entries matching any size."""
    actual = np.shape(array)
    ok = len(actual) == len(shape) and all(
        want is None or want == got for want, got in zip(shape, actual)
    )
    if not ok:
        raise ValidationError(
            message=message or f"Expected shape {shape}, got {actual}",
            field=field,
            code=ErrorCodes.SOLVER_SHAPE_MISMATCH,
        )
    return array
