"""Validation utilities for arrays and numeric parameters"""

from typing import Optional, Tuple

import numpy as np

from core.exceptions import DimensionError, ValidationError


class ArrayValidator:
    """Shape and value checks shared by the numerical modules"""

    @staticmethod
    def as_vector(value, name: str, size: Optional[int] = None) -> np.ndarray:
        """
        Coerce to a 1-D float array, optionally checking its length

        Args:
            value: Array-like input
            name: Argument name used in error messages
            size: Expected length

        Returns:
            1-D float64 array
        """
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 1:
            raise DimensionError(f"{name} must be a vector", expected=1, actual=arr.ndim)
        if size is not None and arr.shape[0] != size:
            raise DimensionError(f"{name} has wrong length", expected=size, actual=arr.shape[0])
        return arr

    @staticmethod
    def as_square(value, name: str = "matrix") -> np.ndarray:
        """Coerce to a square 2-D float array"""
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"{name} must be square", actual=arr.shape)
        return arr

    @staticmethod
    def first_nonfinite_row(arr: np.ndarray) -> Optional[int]:
        """Index of the first row holding a NaN/Inf, or None"""
        bad = ~np.all(np.isfinite(arr), axis=1)
        if not bad.any():
            return None
        return int(np.argmax(bad))

    @staticmethod
    def in_simplex(y: np.ndarray, tol: float = 1e-9) -> bool:
        """Check y_i >= -tol and |sum(y) - 1| <= tol"""
        return bool(np.all(y >= -tol) and abs(float(np.sum(y)) - 1.0) <= tol)


class RangeValidator:
    """Scalar range checks"""

    @staticmethod
    def in_interval(
        value: float,
        name: str,
        bounds: Tuple[float, float],
        closed: Tuple[bool, bool] = (True, True),
    ) -> float:
        """
        Check value against an interval

        Args:
            value: Value to check
            name: Parameter name
            bounds: (low, high)
            closed: Whether each end is inclusive
        """
        low, high = bounds
        ok_low = value >= low if closed[0] else value > low
        ok_high = value <= high if closed[1] else value < high
        if not (ok_low and ok_high):
            lo = "[" if closed[0] else "("
            hi = "]" if closed[1] else ")"
            raise ValidationError(
                f"{name} must lie in {lo}{low}, {high}{hi}", field=name, value=value
            )
        return value
