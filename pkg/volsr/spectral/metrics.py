"""
Error statistics between predictions and ground truth.
"""

import numpy as np
from pydantic import BaseModel

from ..errors import ShapeError


class ErrorStats(BaseModel):
    max_abs_error: float
    mean_abs_error: float


def _abs_diff(pred, truth) -> np.ndarray:
    pred, truth = np.asarray(pred, dtype=np.float64), np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"shape mismatch: prediction {pred.shape} vs truth {truth.shape}")
    return np.abs(pred - truth)


def field_error(pred, truth) -> ErrorStats:
    """Max and mean absolute error over a plane or volume"""
    diff = _abs_diff(pred, truth)
    return ErrorStats(max_abs_error=float(diff.max()), mean_abs_error=float(diff.mean()))


def spectrum_error(pred_amplitude, truth_amplitude) -> ErrorStats:
    """Max and mean absolute error between two amplitude maps"""
    return field_error(pred_amplitude, truth_amplitude)


def mean_squared_error(pred, truth) -> float:
    diff = _abs_diff(pred, truth)
    return float(np.mean(diff * diff))


def max_value_loss(pred, truth) -> float:
    """|max(pred) - max(truth)|"""
    return abs(float(np.max(pred)) - float(np.max(truth)))


__all__ = ['ErrorStats', 'field_error', 'spectrum_error', 'mean_squared_error', 'max_value_loss']
