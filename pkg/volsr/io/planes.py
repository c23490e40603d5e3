#!/usr/bin/env python3
"""
Volsr Plane Extraction
======================

2D slices of volume fields and their 8-bit grayscale (PGM, P5) export.

Orientation: a plane keeps the two remaining grid axes in x, y, z order, so
the z-normal plane is indexed [ix, iy]. In the exported image the first
plane axis runs left to right and the second one top to bottom.

Version: 1.0.0
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image
from pydantic import BaseModel

from .atomic import atomic_write_bytes, atomic_write_json
from .volume import VolumeField
from ..errors import ContractViolationError, FormatError

logger = logging.getLogger(__name__)

AXES = ('x', 'y', 'z')
CONSTANT_GRAY = 128

PathLike = Union[str, Path]


@dataclass
class Plane2D:
    """
    2D scalar grid cut from a volume.

    Attributes:
        values: [n1, n2] array
        axes: labels of the two in-plane axes, e.g. ('x', 'y')
        normal: the axis the plane is normal to
        index: position along the normal axis
        component: source component label
    """

    values: np.ndarray
    axes: Tuple[str, str]
    normal: str = 'z'
    index: int = 0
    component: str = 'u'

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


class PgmScale(BaseModel):
    """Sidecar of a PGM export: the linear map used for 0..255"""

    min: float
    max: float

    def decode(self, pixels: np.ndarray) -> np.ndarray:
        if self.max == self.min:
            return np.full(pixels.shape, self.min)
        return self.min + pixels.astype(np.float64) / 255.0 * (self.max - self.min)


def extract_plane(volume: VolumeField, axis: str, index: int, component: str) -> Plane2D:
    """
    Copy the plane normal to `axis` at `index`.

    Raises:
        ContractViolationError: unknown axis or out-of-range index
    """
    if axis not in AXES:
        raise ContractViolationError(f"axis must be one of {AXES}, got {axis!r}")
    a = AXES.index(axis)
    extent = volume.dims[a]
    if not 0 <= index < extent:
        raise ContractViolationError(f"plane index {index} out of range for {axis} extent {extent}")
    grid = volume.component(component)
    values = np.take(grid, index, axis=a).copy()
    remaining = tuple(label for label in AXES if label != axis)
    return Plane2D(values, remaining, axis, int(index), component)


def midplane_index(volume: VolumeField, axis: str) -> int:
    return volume.dims[AXES.index(axis)] // 2


def quantize(values: np.ndarray) -> Tuple[np.ndarray, PgmScale]:
    """Linear min-max mapping to uint8; a constant array maps to 128"""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ContractViolationError("cannot export a plane with non-finite values")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape, CONSTANT_GRAY, dtype=np.uint8), PgmScale(min=lo, max=hi)
    scaled = np.rint((values - lo) / (hi - lo) * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8), PgmScale(min=lo, max=hi)


def export_pgm(plane: Union[Plane2D, np.ndarray], path: PathLike) -> Path:
    """
    Write an 8-bit binary PGM and a `<path>.json` sidecar with (min, max).

    Returns:
        Path: the image path
    """
    values = plane.values if isinstance(plane, Plane2D) else np.asarray(plane)
    if values.ndim != 2:
        raise ContractViolationError(f"export_pgm expects a 2D plane, got shape {values.shape}")
    pixels, scale = quantize(values)
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels.T)).save(buffer, format='PPM')
    path = atomic_write_bytes(path, buffer.getvalue())
    atomic_write_json(Path(str(path) + '.json'), scale.model_dump())
    return path


def read_pgm(path: PathLike) -> Tuple[np.ndarray, Optional[PgmScale]]:
    """
    Read a PGM written by export_pgm.

    Returns:
        (pixels indexed like the source plane [n1, n2], scale sidecar or None)
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode != 'L':
                raise FormatError(f"{path} is not an 8-bit grayscale image (mode {img.mode})")
            pixels = np.asarray(img).T.copy()
    except OSError as e:
        raise FormatError(f"cannot read PGM {path}: {e}") from e
    sidecar = Path(str(path) + '.json')
    scale = PgmScale.model_validate_json(sidecar.read_text(encoding='utf-8')) if sidecar.exists() else None
    return pixels, scale


__all__ = [
    'AXES',
    'Plane2D',
    'PgmScale',
    'extract_plane',
    'midplane_index',
    'quantize',
    'export_pgm',
    'read_pgm',
]
