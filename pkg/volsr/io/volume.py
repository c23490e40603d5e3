#!/usr/bin/env python3
"""
Volsr Volume Container
======================

Binary container for multi-component velocity fields.

Layout (all little-endian):

    magic        8 bytes   b"VOLSR\\0\\0\\0"
    version      u32
    header_len   u32       bytes of header that follow
    header:
        dims         3 x u32   (Dx, Dy, Dz)
        ncomp        u32
        dtype code   u8        1 = f32, 2 = f64
        reserved     3 bytes   zero
        domain       3 x f64   (Lx, Ly, Lz)
        time_tag     i64
        labels       ncomp x (u8 length + ASCII bytes), each one of u, v, w, mask
    payload:     ncomp grids, each Dx*Dy*Dz values, x fastest

A JSON sidecar (FieldMeta) mirrors the header for humans and tooling.

Version: 1.0.0
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .atomic import atomic_write_bytes, atomic_write_json, sha256_bytes
from ..errors import (
    ContractViolationError,
    FormatError,
    MagicMismatchError,
    PayloadLengthError,
    ShapeError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

logger = logging.getLogger(__name__)

MAGIC = b"VOLSR\0\0\0"
VERSION = 1
COMPONENT_LABELS = ('u', 'v', 'w')
# velocity components plus the stitcher's coverage mask
FIELD_LABELS = COMPONENT_LABELS + ('mask',)

_PREAMBLE = struct.Struct('<8sII')
_FIXED_HEADER = struct.Struct('<3IIB3x3dq')
_DTYPE_CODES = {np.dtype('<f4'): 1, np.dtype('<f8'): 2}
_CODE_DTYPES = {1: np.dtype('<f4'), 2: np.dtype('<f8')}

PathLike = Union[str, Path]


@dataclass
class VolumeField:
    """
    Multi-component scalar grids on a (Dx, Dy, Dz) lattice.

    Arrays are indexed [ix, iy, iz]; on disk the x index varies fastest.
    """

    dims: Tuple[int, int, int]
    components: Tuple[str, ...]
    domain: Tuple[float, float, float]
    time_tag: int
    data: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.components = tuple(self.components)
        self.domain = tuple(float(v) for v in self.domain)
        self.time_tag = int(self.time_tag)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ShapeError(f"dims must be three extents >= 1, got {self.dims}")
        if len(self.domain) != 3 or min(self.domain) <= 0:
            raise ContractViolationError(f"domain extents must be > 0, got {self.domain}")
        if not self.components or len(set(self.components)) != len(self.components):
            raise ContractViolationError(f"components must be unique and non-empty, got {self.components}")
        unknown = [name for name in self.components if name not in FIELD_LABELS]
        if unknown:
            raise ContractViolationError(f"unknown component labels {unknown} (allowed: {list(FIELD_LABELS)})")
        if set(self.data) != set(self.components):
            raise ContractViolationError(
                f"data keys {sorted(self.data)} do not match components {list(self.components)}"
            )
        dtypes = set()
        for name in self.components:
            grid = np.asarray(self.data[name])
            if grid.shape != self.dims:
                raise ShapeError(f"component {name} has shape {grid.shape}, expected {self.dims}")
            if grid.dtype not in (np.float32, np.float64):
                raise ContractViolationError(f"component {name} must be f32 or f64, got {grid.dtype}")
            if not np.all(np.isfinite(grid)):
                raise ContractViolationError(f"component {name} contains non-finite values")
            dtypes.add(grid.dtype)
            self.data[name] = grid
        if len(dtypes) != 1:
            raise ContractViolationError("all components must share one dtype")

    @property
    def dtype(self) -> np.dtype:
        return self.data[self.components[0]].dtype

    def component(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise ContractViolationError(f"field has no component '{name}' (has {list(self.components)})")
        return self.data[name]

    def select(self, names: Sequence[str]) -> 'VolumeField':
        """Sub-field with only the given components"""
        return VolumeField(self.dims, tuple(names), self.domain, self.time_tag,
                           {n: self.component(n) for n in names})


class NormalizationInfo(BaseModel):
    mean: float
    std: float


class FieldMeta(BaseModel):
    """JSON mirror of a container header"""

    dims: Tuple[int, int, int]
    components: Tuple[str, ...]
    domain: Tuple[float, float, float]
    time_tag: int
    dtype: str = Field(pattern='^(f32|f64)$')
    endianness: str = 'little'
    normalization: Optional[Dict[str, NormalizationInfo]] = None

    @classmethod
    def from_field(cls, volume: VolumeField, normalization: Optional[Dict[str, NormalizationInfo]] = None) -> 'FieldMeta':
        return cls(
            dims=volume.dims,
            components=volume.components,
            domain=volume.domain,
            time_tag=volume.time_tag,
            dtype='f32' if volume.dtype == np.float32 else 'f64',
            normalization=normalization,
        )


def encode_volume(volume: VolumeField) -> bytes:
    """Serialize a field to container bytes"""
    dtype = np.dtype(volume.dtype).newbyteorder('<')
    labels = b''
    for name in volume.components:
        raw = name.encode('ascii')
        if len(raw) > 255:
            raise ContractViolationError(f"component label too long: {name}")
        labels += struct.pack('<B', len(raw)) + raw
    header = _FIXED_HEADER.pack(*volume.dims, len(volume.components), _DTYPE_CODES[dtype],
                                *volume.domain, volume.time_tag) + labels
    parts = [_PREAMBLE.pack(MAGIC, VERSION, len(header)), header]
    for name in volume.components:
        parts.append(np.asarray(volume.data[name], dtype=dtype).ravel(order='F').tobytes())
    return b''.join(parts)


def decode_volume(blob: bytes) -> VolumeField:
    """
    Parse container bytes.

    Raises:
        MagicMismatchError, UnsupportedVersionError, TruncatedPayloadError,
        PayloadLengthError
    """
    if len(blob) < _PREAMBLE.size:
        raise TruncatedPayloadError(f"container is {len(blob)} bytes, shorter than its preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise MagicMismatchError(f"bad magic {magic!r}")
    if version > VERSION:
        raise UnsupportedVersionError(f"container version {version} (reader supports {VERSION})")
    offset = _PREAMBLE.size
    if len(blob) < offset + header_len or header_len < _FIXED_HEADER.size:
        raise TruncatedPayloadError("container header is truncated")

    dx, dy, dz, ncomp, code, lx, ly, lz, time_tag = _FIXED_HEADER.unpack_from(blob, offset)
    if code not in _CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    dtype = _CODE_DTYPES[code]
    pos = offset + _FIXED_HEADER.size
    components = []
    for _ in range(ncomp):
        if pos >= offset + header_len:
            raise TruncatedPayloadError("component labels run past the header")
        (length,) = struct.unpack_from('<B', blob, pos)
        try:
            label = blob[pos + 1:pos + 1 + length].decode('ascii')
        except UnicodeDecodeError as e:
            raise FormatError("component label is not ASCII") from e
        if label not in FIELD_LABELS:
            raise FormatError(f"unknown component label {label!r}")
        components.append(label)
        pos += 1 + length
    if pos != offset + header_len:
        raise FormatError(f"header length {header_len} disagrees with its contents")

    payload = memoryview(blob)[offset + header_len:]
    voxels = dx * dy * dz
    expected = voxels * ncomp * dtype.itemsize
    if len(payload) < expected:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, header declares {expected}")
    if len(payload) > expected:
        raise PayloadLengthError(f"payload has {len(payload)} bytes, dims imply {expected}")

    data = {}
    step = voxels * dtype.itemsize
    for i, name in enumerate(components):
        flat = np.frombuffer(payload[i * step:(i + 1) * step], dtype=dtype)
        data[name] = flat.reshape((dx, dy, dz), order='F').astype(dtype.newbyteorder('='), copy=True)
    return VolumeField((dx, dy, dz), tuple(components), (lx, ly, lz), time_tag, data)


def write_volume(volume: VolumeField, path: PathLike, sidecar: bool = True) -> Path:
    """Write a container atomically, plus a `<path>.json` FieldMeta sidecar"""
    path = atomic_write_bytes(path, encode_volume(volume))
    if sidecar:
        write_field_meta(FieldMeta.from_field(volume), meta_path(path))
    logger.debug("wrote %s (%s, dims=%s)", path, ','.join(volume.components), volume.dims)
    return path


def read_volume(path: PathLike) -> VolumeField:
    with open(path, 'rb') as f:
        blob = f.read()
    return decode_volume(blob)


def meta_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + '.json')


def write_field_meta(meta: FieldMeta, path: PathLike) -> Path:
    return atomic_write_json(path, meta.model_dump(mode='json'))


def read_field_meta(path: PathLike) -> FieldMeta:
    return FieldMeta.model_validate_json(Path(path).read_text(encoding='utf-8'))


def field_hash(volume: VolumeField) -> str:
    """SHA-256 of the canonical container bytes"""
    return sha256_bytes(encode_volume(volume))


__all__ = [
    'MAGIC',
    'VERSION',
    'COMPONENT_LABELS',
    'FIELD_LABELS',
    'VolumeField',
    'FieldMeta',
    'NormalizationInfo',
    'encode_volume',
    'decode_volume',
    'write_volume',
    'read_volume',
    'meta_path',
    'write_field_meta',
    'read_field_meta',
    'field_hash',
]
