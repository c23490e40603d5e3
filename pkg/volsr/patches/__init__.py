"""
Volsr patch pipeline: window sampling, LR/HR pair construction, normalization, datasets.
"""

from .pipeline import (
    SamplePair,
    build_dataset,
    center_crop,
    center_offset,
    coarsen,
    count_origins,
    extract_cube,
    make_lr_input,
    tile_origins,
    upsample_lr,
)
from .spec import PATCH_OUT, NormStats, PatchSpec, apply_norm, compute_norm_stats, invert_norm
from .store import DatasetManifest, check_manifest, load_dataset, load_manifest, save_dataset

__all__ = [
    'PATCH_OUT',
    'PatchSpec',
    'NormStats',
    'SamplePair',
    'compute_norm_stats',
    'apply_norm',
    'invert_norm',
    'tile_origins',
    'count_origins',
    'coarsen',
    'upsample_lr',
    'center_offset',
    'center_crop',
    'make_lr_input',
    'extract_cube',
    'build_dataset',
    'DatasetManifest',
    'save_dataset',
    'load_manifest',
    'load_dataset',
    'check_manifest',
]
