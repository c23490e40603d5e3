#!/usr/bin/env python3
"""
Volsr Stitch Accumulator
========================

Reassembles 16^3 patch predictions into a global grid. A patch predicted
for the q^3 window at `origin` lands at origin + floor((q - 16) / 2), the
position of the center crop it was trained against. Overlapping patches are
averaged: value = sum(w * patch) / sum(w), with w = 1 ("uniform") or a
separable sin^2 taper ("tapered").

In strict deterministic mode contributions are kept until finalize() and
summed in sorted-origin order, so the result does not depend on insertion
order.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core import runtime
from ..errors import ContractViolationError, CoverageError, EmptyAccumulatorError, PlacementError, ShapeError
from ..io.volume import VolumeField
from ..patches.pipeline import center_offset
from ..patches.spec import PatchSpec

logger = logging.getLogger(__name__)

BLEND_MODES = ('uniform', 'tapered')
FILL_POLICIES = ('coarse', 'zero', 'error')

Position = Tuple[int, int, int]


@dataclass
class CoverageMask:
    """True where at least one patch contributed"""

    mask: np.ndarray

    @property
    def fraction(self) -> float:
        return coverage_fraction(self.mask)

    @property
    def uncovered(self) -> int:
        return int(self.mask.size - np.count_nonzero(self.mask))


def coverage_fraction(mask) -> float:
    mask = mask.mask if isinstance(mask, CoverageMask) else np.asarray(mask)
    return float(np.count_nonzero(mask)) / mask.size


def blend_weights(edge: int, blend: str) -> np.ndarray:
    if blend == 'uniform':
        return np.ones((edge,) * 3)
    if blend == 'tapered':
        w = np.sin(np.pi * (np.arange(edge) + 0.5) / edge) ** 2
        return w[:, None, None] * w[None, :, None] * w[None, None, :]
    raise ContractViolationError(f"blend must be one of {BLEND_MODES}, got {blend!r}")


class StitchAccumulator:
    """
    Weighted sum and coverage count of placed patches.

    Attributes:
        dims: target grid extents
        spec: the PatchSpec the patches were produced with
    """

    def __init__(self, dims: Tuple[int, int, int], spec: PatchSpec, blend: str = 'uniform',
                 strict: Optional[bool] = None, domain: Tuple[float, float, float] = (1.0, 1.0, 1.0),
                 time_tag: int = 0):
        self.dims = tuple(int(d) for d in dims)
        self.spec = spec
        self.domain = domain
        self.time_tag = time_tag
        self.blend = blend
        self.strict = runtime.strict_deterministic() if strict is None else bool(strict)
        self.weights = blend_weights(spec.patch_out, blend)
        self.sum = np.zeros(self.dims)
        self.weight = np.zeros(self.dims)
        self.count = np.zeros(self.dims, dtype=np.int64)
        self._pending: List[Tuple[Position, np.ndarray]] = []
        self.placed = 0

    def position(self, origin: Position) -> Position:
        offset = center_offset(self.spec.q, self.spec.patch_out)
        return tuple(int(o) + offset for o in origin)

    def place_patch(self, prediction: np.ndarray, origin: Position) -> None:
        """
        Add one 16^3 prediction made for the window at `origin`.

        Raises:
            ShapeError: prediction is not 16^3
            PlacementError: the patch does not fit in the grid
        """
        edge = self.spec.patch_out
        prediction = np.asarray(prediction, dtype=np.float64)
        if prediction.shape != (edge,) * 3:
            raise ShapeError(f"patch must be {edge}^3, got {prediction.shape}")
        pos = self.position(origin)
        if any(p < 0 or p + edge > d for p, d in zip(pos, self.dims)):
            raise PlacementError(f"patch at {pos} (origin {tuple(origin)}) does not fit in grid {self.dims}")
        if self.strict:
            self._pending.append((pos, prediction.copy()))
        else:
            self._add(pos, prediction)
        self.placed += 1

    def _add(self, pos: Position, prediction: np.ndarray) -> None:
        edge = self.spec.patch_out
        x, y, z = pos
        region = (slice(x, x + edge), slice(y, y + edge), slice(z, z + edge))
        self.sum[region] += self.weights * prediction
        self.weight[region] += self.weights
        self.count[region] += 1

    def _flush(self) -> None:
        for pos, prediction in sorted(self._pending, key=lambda item: (item[0], item[1].tobytes())):
            self._add(pos, prediction)
        self._pending = []

    def finalize(self, fill: Optional[np.ndarray] = None,
                 fill_policy: str = 'coarse') -> Tuple[VolumeField, CoverageMask]:
        """
        Average the placed patches (values stay in the patches' normalized units).

        Args:
            fill: values for uncovered voxels (the upsampled coarse field)
            fill_policy: 'coarse' (use `fill`, or 0 with a warning if absent),
                'zero', or 'error' (raise CoverageError on any uncovered voxel)

        Returns:
            (VolumeField holding the PatchSpec component, CoverageMask)
        """
        if self.placed == 0:
            raise EmptyAccumulatorError("finalize() called before any patch was placed")
        if fill_policy not in FILL_POLICIES:
            raise ContractViolationError(f"fill_policy must be one of {FILL_POLICIES}, got {fill_policy!r}")
        self._flush()
        covered = self.count > 0
        grid = np.zeros(self.dims)
        np.divide(self.sum, self.weight, out=grid, where=covered)
        mask = CoverageMask(covered)
        if mask.uncovered:
            if fill_policy == 'error':
                raise CoverageError(f"{mask.uncovered} voxels received no patch")
            if fill_policy == 'coarse' and fill is not None:
                fill = np.asarray(fill, dtype=np.float64)
                if fill.shape != self.dims:
                    raise ShapeError(f"fill grid {fill.shape} does not match {self.dims}")
                grid[~covered] = fill[~covered]
            else:
                logger.warning("⚠️ %d uncovered voxels filled with 0", mask.uncovered)
        volume = VolumeField(self.dims, (self.spec.component,), self.domain, self.time_tag,
                             {self.spec.component: grid})
        return volume, mask


def place_patch(acc: StitchAccumulator, prediction: np.ndarray, origin: Position) -> None:
    acc.place_patch(prediction, origin)


def finalize(acc: StitchAccumulator, fill: Optional[np.ndarray] = None,
             fill_policy: str = 'coarse') -> Tuple[VolumeField, CoverageMask]:
    return acc.finalize(fill, fill_policy)


__all__ = [
    'BLEND_MODES',
    'FILL_POLICIES',
    'CoverageMask',
    'coverage_fraction',
    'blend_weights',
    'StitchAccumulator',
    'place_patch',
    'finalize',
]
