"""
Conversion of headerless little-endian raw dumps into VolumeFields.

The raw file holds the listed components back to back, each Dx*Dy*Dz values
in either x-fastest (Fortran, the container's own order) or z-fastest (C)
order.
"""

import logging
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from .volume import VolumeField
from ..errors import ConfigError, PayloadLengthError, TruncatedPayloadError

logger = logging.getLogger(__name__)

RAW_DTYPES = {'f32': np.dtype('<f4'), 'f64': np.dtype('<f8')}
RAW_ORDERS = {'x-fastest': 'F', 'z-fastest': 'C'}


def ingest_raw(raw_path: Union[str, Path], dims: Tuple[int, int, int], dtype: str = 'f32',
               components: Sequence[str] = ('u',), domain: Tuple[float, float, float] = (1.0, 1.0, 1.0),
               time_tag: int = 0, order: str = 'x-fastest') -> VolumeField:
    """
    Read a raw dump.

    Raises:
        ConfigError: missing file, unknown dtype or order
        TruncatedPayloadError / PayloadLengthError: size disagrees with dims
    """
    raw_path = Path(raw_path)
    if not raw_path.exists():
        raise ConfigError(f"raw input not found: {raw_path}")
    if dtype not in RAW_DTYPES:
        raise ConfigError(f"raw dtype must be one of {sorted(RAW_DTYPES)}, got {dtype!r}")
    if order not in RAW_ORDERS:
        raise ConfigError(f"raw order must be one of {sorted(RAW_ORDERS)}, got {order!r}")
    np_dtype = RAW_DTYPES[dtype]
    dims = tuple(int(d) for d in dims)
    voxels = int(np.prod(dims))

    flat = np.fromfile(raw_path, dtype=np_dtype)
    expected = voxels * len(components)
    if flat.size < expected:
        raise TruncatedPayloadError(f"{raw_path} holds {flat.size} values, expected {expected}")
    if flat.size > expected:
        raise PayloadLengthError(f"{raw_path} holds {flat.size} values, dims imply {expected}")

    data = {}
    for i, name in enumerate(components):
        chunk = flat[i * voxels:(i + 1) * voxels]
        data[name] = chunk.reshape(dims, order=RAW_ORDERS[order]).astype(np_dtype.newbyteorder('='))
    logger.info("ingested %s: dims=%s components=%s", raw_path.name, dims, ','.join(components))
    return VolumeField(dims, tuple(components), domain, time_tag, data)


__all__ = ['RAW_DTYPES', 'RAW_ORDERS', 'ingest_raw']
