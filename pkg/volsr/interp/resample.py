#!/usr/bin/env python3
"""
Volsr Separable Resampling
==========================

Axis-by-axis resampling of 3D grids with the kernels of `kernels.py`.

Sample positions are endpoint aligned: output index i along an axis of
input extent n and output extent N sits at input coordinate
i * (n - 1) / (N - 1), so the first and last samples coincide with the first
and last input voxels. Taps beyond the grid are clamped to the edge voxel.

Version: 1.0.0
"""

import logging
from typing import Sequence, Tuple, Union

import numpy as np

from .kernels import get_kernel, kernel_weights
from ..errors import ContractViolationError, ShapeError
from ..io.volume import VolumeField

logger = logging.getLogger(__name__)

Volume = Union[np.ndarray, VolumeField]


def aligned_positions(n_in: int, n_out: int) -> np.ndarray:
    """Endpoint-aligned input coordinates of n_out samples"""
    if n_out == 1:
        return np.zeros(1)
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def weight_matrix(n_in: int, positions: np.ndarray, kind: str) -> np.ndarray:
    """
    Dense [n_out, n_in] interpolation matrix for one axis.

    Args:
        n_in: input extent
        positions: input coordinates of each output sample
        kind: kernel name
    """
    spec = get_kernel(kind)
    positions = np.asarray(positions, dtype=np.float64)
    base = np.floor(positions)
    t = positions - base
    # guard against t rounding up to exactly 1.0
    wrap = t >= 1.0
    base[wrap] += 1.0
    t[wrap] = 0.0
    weights = kernel_weights(kind, t)
    matrix = np.zeros((positions.size, n_in))
    rows = np.arange(positions.size)
    for j, offset in enumerate(spec.offsets):
        taps = np.clip(base.astype(np.int64) + offset, 0, n_in - 1)
        np.add.at(matrix, (rows, taps), weights[:, j])
    return matrix


def apply_axis(grid: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, grid, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _resample_grid(grid: np.ndarray, shape: Tuple[int, int, int], kind: str) -> np.ndarray:
    if grid.ndim != 3:
        raise ShapeError(f"resampling expects a 3D grid, got shape {grid.shape}")
    out = np.asarray(grid, dtype=np.float64)
    for axis, n_out in enumerate(shape):
        n_in = out.shape[axis]
        if n_in == n_out:
            continue
        out = apply_axis(out, weight_matrix(n_in, aligned_positions(n_in, n_out), kind), axis)
    return out.astype(grid.dtype, copy=False)


def _check_shape(shape: Sequence[int]) -> Tuple[int, int, int]:
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3:
        raise ShapeError(f"target shape must have three extents, got {shape}")
    if min(shape) < 1:
        raise ContractViolationError(f"output dims must be >= 1, got {shape}")
    return shape


def resample_to_shape(volume: Volume, shape: Sequence[int], kind: str = 'trilinear') -> Volume:
    """Resample a grid (or every component of a field) to an explicit shape"""
    shape = _check_shape(shape)
    get_kernel(kind)
    if isinstance(volume, VolumeField):
        data = {name: _resample_grid(volume.data[name], shape, kind) for name in volume.components}
        return VolumeField(shape, volume.components, volume.domain, volume.time_tag, data)
    return _resample_grid(np.asarray(volume), shape, kind)


def scaled_shape(dims: Sequence[int], scale: Sequence[float]) -> Tuple[int, int, int]:
    """round(D * f) per axis"""
    if len(scale) != 3 or min(scale) <= 0:
        raise ContractViolationError(f"scales must be three positive factors, got {tuple(scale)}")
    return _check_shape([int(round(d * f)) for d, f in zip(dims, scale)])


def resample3d(volume: Volume, scale: Union[float, Sequence[float]], kind: str = 'trilinear',
               edge: str = 'clamp') -> Volume:
    """
    Resample by per-axis scale factors.

    Args:
        volume: 3D array or VolumeField
        scale: (fx, fy, fz) or a single factor; output extent is round(D * f)
        kind: nearest | trilinear | cubic_catmull_rom | lanczos3
        edge: only 'clamp' is supported

    Returns:
        Resampled array or VolumeField (same type as the input)
    """
    if edge != 'clamp':
        raise ContractViolationError(f"unsupported edge policy '{edge}' (only 'clamp')")
    if np.isscalar(scale):
        scale = (float(scale),) * 3
    dims = volume.dims if isinstance(volume, VolumeField) else np.asarray(volume).shape
    return resample_to_shape(volume, scaled_shape(dims, scale), kind)


def lift_to_grid(volume: VolumeField, dims: Sequence[int], kind: str = 'trilinear') -> VolumeField:
    """Map a coarse-grid field (e.g. LES output) onto a finer grid of the same domain"""
    lifted = resample_to_shape(volume, dims, kind)
    logger.info("lifted field %s -> %s with %s", volume.dims, lifted.dims, kind)
    return lifted


__all__ = [
    'aligned_positions',
    'weight_matrix',
    'apply_axis',
    'resample_to_shape',
    'scaled_shape',
    'resample3d',
    'lift_to_grid',
]
