"""
Volsr stitcher: overlap-averaged reassembly of patch predictions.
"""

from .accumulator import (
    BLEND_MODES,
    FILL_POLICIES,
    CoverageMask,
    StitchAccumulator,
    blend_weights,
    coverage_fraction,
    finalize,
    place_patch,
)
from .reconstruct import coarse_fill, mask_field, reconstruct_full

__all__ = [
    'BLEND_MODES',
    'FILL_POLICIES',
    'CoverageMask',
    'StitchAccumulator',
    'blend_weights',
    'coverage_fraction',
    'place_patch',
    'finalize',
    'coarse_fill',
    'reconstruct_full',
    'mask_field',
]
