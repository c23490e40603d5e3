#!/usr/bin/env python3
"""
Volsr Patch Pipeline
====================

Turns a velocity field into aligned (LR, HR) 16^3 training pairs:

1. slide a q^3 window over the normalized component with stride s
2. HR target = central 16^3 block of the cube
3. LR input = cube subsampled by A, upsampled back to 16^3 (endpoint aligned)

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from .spec import PATCH_OUT, NormStats, PatchSpec, apply_norm
from ..core.runtime import ordered_map
from ..errors import ContractViolationError, ShapeError
from ..interp.resample import aligned_positions, apply_axis, weight_matrix
from ..io.volume import VolumeField

logger = logging.getLogger(__name__)

Origin = Tuple[int, int, int]


@dataclass
class SamplePair:
    """One training pair; `origin` is the corner of its q^3 source cube"""

    lr: np.ndarray
    hr: np.ndarray
    origin: Origin


def _axis_starts(extent: int, q: int, s: int) -> range:
    if q > extent:
        raise ContractViolationError(f"cube edge q={q} exceeds axis extent {extent}")
    return range(0, extent - q + 1, s)


def tile_origins(dims: Sequence[int], q: int, s: int) -> List[Origin]:
    """All q^3 window corners stepping by s, lexicographic in (x, y, z)"""
    if s < 1:
        raise ContractViolationError(f"stride must be >= 1, got {s}")
    axes = [_axis_starts(int(d), q, s) for d in dims]
    return [tuple(o) for o in product(*axes)]


def count_origins(dims: Sequence[int], q: int, s: int) -> int:
    """Closed-form len(tile_origins(dims, q, s))"""
    count = 1
    for d in dims:
        if q > d:
            raise ContractViolationError(f"cube edge q={q} exceeds axis extent {d}")
        count *= (int(d) - q) // s + 1
    return count


def _check_cube(cube: np.ndarray) -> int:
    if cube.ndim != 3 or len(set(cube.shape)) != 1:
        raise ShapeError(f"expected a cubic 3D block, got shape {cube.shape}")
    return cube.shape[0]


def coarsen(cube: np.ndarray, A: int, prefilter: bool = False) -> np.ndarray:
    """
    Subsample a q^3 cube by A: out[i, j, k] = cube[A*i, A*j, A*k].

    With prefilter=True each output voxel is instead the mean of the A^3 block
    starting at (A*i, A*j, A*k).
    """
    q = _check_cube(cube)
    if A < 1 or q % A:
        raise ContractViolationError(f"cube edge {q} is not divisible by A={A}")
    if prefilter and A > 1:
        m = q // A
        return cube.reshape(m, A, m, A, m, A).mean(axis=(1, 3, 5)).astype(cube.dtype, copy=False)
    return np.ascontiguousarray(cube[::A, ::A, ::A])


def upsample_lr(cube: np.ndarray, target: int = PATCH_OUT, method: str = 'trilinear') -> np.ndarray:
    """Endpoint-aligned trilinear or nearest upsampling of an m^3 cube to target^3"""
    m = _check_cube(cube)
    if m > target:
        raise ContractViolationError(f"cannot upsample a {m}^3 cube to {target}^3")
    if method not in ('trilinear', 'nearest'):
        raise ContractViolationError(f"upsample method must be trilinear or nearest, got {method!r}")
    if m == target:
        return cube.copy()
    matrix = weight_matrix(m, aligned_positions(m, target), method)
    out = cube.astype(np.float64)
    for axis in range(3):
        out = apply_axis(out, matrix, axis)
    return out.astype(cube.dtype, copy=False)


def center_offset(q: int, out: int = PATCH_OUT) -> int:
    return (q - out) // 2


def center_crop(cube: np.ndarray, out: int = PATCH_OUT) -> np.ndarray:
    q = _check_cube(cube)
    if q < out:
        raise ContractViolationError(f"cube edge {q} is smaller than the {out}^3 crop")
    o = center_offset(q, out)
    return np.ascontiguousarray(cube[o:o + out, o:o + out, o:o + out])


def make_lr_input(cube: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """LR network input for a (normalized) q^3 cube"""
    return upsample_lr(coarsen(cube, spec.A, spec.prefilter), spec.patch_out, spec.upsample_method)


def extract_cube(grid: np.ndarray, origin: Origin, q: int) -> np.ndarray:
    x, y, z = origin
    return grid[x:x + q, y:y + q, z:z + q]


def build_dataset(volume: VolumeField, spec: PatchSpec, stats: NormStats) -> List[SamplePair]:
    """
    Build every (LR, HR) pair of one component, in tile_origins order.

    Args:
        volume: source field
        spec: sampling parameters (spec.component selects the grid)
        stats: normalization statistics of the training field
    """
    if stats.component != spec.component:
        raise ContractViolationError(
            f"stats are for component {stats.component}, spec asks for {spec.component}"
        )
    grid = apply_norm(volume.component(spec.component), stats)
    origins = tile_origins(volume.dims, spec.q, spec.s)

    def make_pair(origin: Origin) -> SamplePair:
        cube = extract_cube(grid, origin, spec.q)
        return SamplePair(lr=make_lr_input(cube, spec), hr=center_crop(cube, spec.patch_out), origin=origin)

    pairs = ordered_map(make_pair, origins)
    logger.info("built %d pairs (component=%s, A=%d, s=%d, q=%d)",
                len(pairs), spec.component, spec.A, spec.s, spec.q)
    return pairs


__all__ = [
    'Origin',
    'SamplePair',
    'tile_origins',
    'count_origins',
    'coarsen',
    'upsample_lr',
    'center_offset',
    'center_crop',
    'make_lr_input',
    'extract_cube',
    'build_dataset',
]
