"""
Volsr volume I/O: container, sidecars, synthetic fields, planes, raw ingestion.
"""

from .atomic import atomic_write_bytes, atomic_write_json, atomic_write_text, sha256_bytes, sha256_file
from .ingest import ingest_raw
from .planes import Plane2D, PgmScale, export_pgm, extract_plane, midplane_index, read_pgm
from .synth import CHANNEL_DOMAIN, ModeTable, synth_field, synth_modes
from .volume import (
    FieldMeta,
    VolumeField,
    decode_volume,
    encode_volume,
    field_hash,
    read_field_meta,
    read_volume,
    write_field_meta,
    write_volume,
)

__all__ = [
    'VolumeField',
    'FieldMeta',
    'encode_volume',
    'decode_volume',
    'write_volume',
    'read_volume',
    'write_field_meta',
    'read_field_meta',
    'field_hash',
    'CHANNEL_DOMAIN',
    'ModeTable',
    'synth_modes',
    'synth_field',
    'Plane2D',
    'PgmScale',
    'extract_plane',
    'midplane_index',
    'export_pgm',
    'read_pgm',
    'ingest_raw',
    'atomic_write_bytes',
    'atomic_write_text',
    'atomic_write_json',
    'sha256_bytes',
    'sha256_file',
]
