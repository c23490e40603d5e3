"""
Full-field reconstruction: slide the dataset window over a field, super-resolve
every LR cube and stitch the predictions back into a global field.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from .accumulator import CoverageMask, StitchAccumulator
from ..core.runtime import ordered_map
from ..errors import ContractViolationError
from ..interp.resample import apply_axis, weight_matrix
from ..io.volume import VolumeField
from ..networks.base import INFER_BATCH, SuperResolver
from ..patches.pipeline import Origin, extract_cube, make_lr_input, tile_origins
from ..patches.spec import NormStats, PatchSpec, apply_norm, invert_norm
from ..patches.store import DatasetManifest, check_manifest

logger = logging.getLogger(__name__)


def coarse_fill(grid: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """
    The grid subsampled by A and trilinearly upsampled back to full size.

    Coarse sample j sits at full voxel A*j, so full voxel i reads coarse
    coordinate i/A; voxels past the last coarse sample take its edge value.
    """
    if spec.A == 1:
        return np.asarray(grid, dtype=np.float64)
    out = np.asarray(grid, dtype=np.float64)[::spec.A, ::spec.A, ::spec.A]
    for axis, n_full in enumerate(grid.shape):
        n_sub = out.shape[axis]
        positions = np.minimum(np.arange(n_full, dtype=np.float64) / spec.A, n_sub - 1)
        out = apply_axis(out, weight_matrix(n_sub, positions, 'trilinear'), axis)
    return out


def _chunks(items: List[Origin], size: int) -> List[List[Origin]]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def reconstruct_full(volume: VolumeField, model: SuperResolver, spec: PatchSpec, stats: NormStats,
                     manifest: Optional[DatasetManifest] = None, blend: str = 'uniform',
                     fill_policy: str = 'coarse') -> Tuple[VolumeField, CoverageMask]:
    """
    Super-resolve a field patch by patch.

    LR inputs are built exactly as for training (normalize, coarsen by A,
    upsample to 16^3); predictions are placed at their center-crop positions,
    averaged, filled where uncovered, and de-normalized.

    Args:
        volume: field on the target grid
        model: any SuperResolver
        spec, stats: must match the training dataset
        manifest: training manifest; when given, spec and stats are checked against it

    Raises:
        ManifestMismatchError: spec or stats differ from the manifest
    """
    if manifest is not None:
        check_manifest(manifest, spec, stats)
    if stats.component != spec.component:
        raise ContractViolationError(f"stats are for {stats.component}, spec asks for {spec.component}")

    raw = volume.component(spec.component)
    grid = apply_norm(raw.astype(np.float64), stats)
    origins = tile_origins(volume.dims, spec.q, spec.s)

    def predict(chunk: List[Origin]) -> np.ndarray:
        lr = np.stack([make_lr_input(extract_cube(grid, o, spec.q), spec) for o in chunk])
        return np.asarray(model.superresolve(lr), dtype=np.float64)

    # superresolve restores the previous mode; concurrent chunks must all see infer
    if hasattr(model, 'set_mode'):
        model.set_mode('infer')
    acc = StitchAccumulator(volume.dims, spec, blend=blend, domain=volume.domain, time_tag=volume.time_tag)
    chunks = _chunks(origins, INFER_BATCH)
    for chunk, predictions in zip(chunks, ordered_map(predict, chunks)):
        for origin, prediction in zip(chunk, predictions):
            acc.place_patch(prediction, origin)

    stitched, mask = acc.finalize(fill=coarse_fill(grid, spec), fill_policy=fill_policy)
    values = invert_norm(stitched.component(spec.component), stats).astype(raw.dtype)
    if mask.uncovered:
        logger.warning("⚠️ %d of %d voxels not covered by any patch", mask.uncovered, mask.mask.size)
    logger.info("✅ reconstructed %s from %d patches (%s, coverage %.3f)",
                volume.dims, len(origins), getattr(model, 'kind', type(model).__name__), mask.fraction)
    result = VolumeField(volume.dims, (spec.component,), volume.domain, volume.time_tag, {spec.component: values})
    return result, mask


def mask_field(mask: CoverageMask, like: VolumeField) -> VolumeField:
    """Coverage mask as a single-component container field (1.0 covered, 0.0 not)"""
    return VolumeField(like.dims, ('mask',), like.domain, like.time_tag, {'mask': mask.mask.astype(np.float32)})


__all__ = ['coarse_fill', 'reconstruct_full', 'mask_field']
