"""
Dataset persistence.

A dataset directory holds:

    lr.volsr / hr.volsr   all e^3 cubes stacked along z in origin order (pair i
                          occupies z in [e*i, e*(i+1)), e = spec.patch_out)
    manifest.json         spec, stats, origins, count, source hash, container hashes

Readers outside volsr split a container with manifest count and spec.patch_out.

The manifest hash (SHA-256 of the canonical manifest bytes) identifies the
dataset in checkpoints.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .pipeline import SamplePair
from .spec import NormStats, PatchSpec
from ..errors import ConfigError, ManifestMismatchError
from ..io.atomic import atomic_write_bytes, sha256_bytes, sha256_file
from ..io.volume import VolumeField, read_volume, write_volume

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
LR_NAME = 'lr.volsr'
HR_NAME = 'hr.volsr'

PathLike = Union[str, Path]


class DatasetManifest(BaseModel):
    spec: PatchSpec
    stats: NormStats
    origins: List[Tuple[int, int, int]]
    source_hash: str
    count: int
    lr_hash: str = ''
    hr_hash: str = ''

    def canonical_bytes(self) -> bytes:
        return (json.dumps(self.model_dump(mode='json'), indent=2, sort_keys=True) + '\n').encode('utf-8')

    def manifest_hash(self) -> str:
        return sha256_bytes(self.canonical_bytes())


def _stack(cubes: List[np.ndarray], component: str) -> VolumeField:
    grid = np.concatenate(cubes, axis=2)
    return VolumeField(grid.shape, (component,), (1.0, 1.0, float(len(cubes))), 0, {component: grid})


def _unstack(volume: VolumeField, component: str, count: int, edge: int) -> List[np.ndarray]:
    grid = volume.component(component)
    if grid.shape != (edge, edge, edge * count):
        raise ManifestMismatchError(f"container shape {grid.shape} does not hold {count} cubes of {edge}^3")
    return [grid[:, :, i * edge:(i + 1) * edge].copy() for i in range(count)]


def save_dataset(pairs: List[SamplePair], spec: PatchSpec, stats: NormStats, source_hash: str,
                 out_dir: PathLike) -> DatasetManifest:
    """
    Write a dataset directory.

    Returns:
        DatasetManifest: the manifest that was written
    """
    if not pairs:
        raise ConfigError("refusing to save an empty dataset")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lr_path = write_volume(_stack([p.lr for p in pairs], spec.component), out_dir / LR_NAME)
    hr_path = write_volume(_stack([p.hr for p in pairs], spec.component), out_dir / HR_NAME)
    manifest = DatasetManifest(
        spec=spec,
        stats=stats,
        origins=[tuple(int(v) for v in p.origin) for p in pairs],
        source_hash=source_hash,
        count=len(pairs),
        lr_hash=sha256_file(lr_path),
        hr_hash=sha256_file(hr_path),
    )
    atomic_write_bytes(out_dir / MANIFEST_NAME, manifest.canonical_bytes())
    logger.info("✅ saved %d pairs to %s (manifest %s)", manifest.count, out_dir, manifest.manifest_hash()[:12])
    return manifest


def load_manifest(data_dir: PathLike) -> DatasetManifest:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"dataset manifest not found: {path}")
    return DatasetManifest.model_validate_json(path.read_text(encoding='utf-8'))


def load_dataset(data_dir: PathLike, verify: bool = True) -> Tuple[List[SamplePair], DatasetManifest]:
    """
    Read a dataset directory back into SamplePairs.

    Raises:
        ManifestMismatchError: container hashes or shapes disagree with the manifest
    """
    data_dir = Path(data_dir)
    manifest = load_manifest(data_dir)
    lr_path, hr_path = data_dir / LR_NAME, data_dir / HR_NAME
    if verify:
        for path, expected in ((lr_path, manifest.lr_hash), (hr_path, manifest.hr_hash)):
            if expected and sha256_file(path) != expected:
                raise ManifestMismatchError(f"{path.name} does not match the manifest hash")
    edge = manifest.spec.patch_out
    component = manifest.spec.component
    lr = _unstack(read_volume(lr_path), component, manifest.count, edge)
    hr = _unstack(read_volume(hr_path), component, manifest.count, edge)
    pairs = [SamplePair(lr=a, hr=b, origin=tuple(o)) for a, b, o in zip(lr, hr, manifest.origins)]
    return pairs, manifest


def check_manifest(manifest: DatasetManifest, spec: Optional[PatchSpec] = None,
                   stats: Optional[NormStats] = None) -> None:
    """Raise ManifestMismatchError if spec or stats differ from the manifest's"""
    if spec is not None and spec != manifest.spec:
        raise ManifestMismatchError(f"patch spec {spec.model_dump()} differs from manifest {manifest.spec.model_dump()}")
    if stats is not None and stats != manifest.stats:
        raise ManifestMismatchError("normalization stats differ from the manifest")


__all__ = [
    'MANIFEST_NAME',
    'DatasetManifest',
    'save_dataset',
    'load_manifest',
    'load_dataset',
    'check_manifest',
]
