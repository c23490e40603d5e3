"""
Checkpoint files.

Layout (little-endian):

    magic       8 bytes  b"VOLSRCKP"
    version     u32
    json_len    u32
    header      UTF-8 JSON: kind, config, dtype, epoch, history,
                manifest_hash, parameter steps, and a block table
                (name, shape, dtype, offset, nbytes) for every array
    blocks      raw C-order arrays, offsets relative to the end of the header

Blocks cover parameter values, Adam moments and batch-norm running
statistics, so a loaded model reproduces the saved one bit for bit.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from .config import GanConfig, VaeConfig
from .gan import GanModel
from .vae import VaeModel
from ..core import runtime
from ..errors import (
    CheckpointMismatchError,
    ConfigError,
    MagicMismatchError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from ..io.atomic import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"VOLSRCKP"
VERSION = 1
_PREAMBLE = struct.Struct('<8sII')

MODEL_TYPES = {
    'vae': (VaeModel, VaeConfig),
    'gan': (GanModel, GanConfig),
}

PathLike = Union[str, Path]
Model = Union[VaeModel, GanModel]


@dataclass
class Checkpoint:
    model: Model
    epoch: int = 0
    history: List[Dict[str, float]] = field(default_factory=list)
    manifest_hash: str = ''


def _arrays(model: Model) -> List[Tuple[str, np.ndarray]]:
    arrays = []
    for name, param in model.named_parameters():
        arrays += [(f"{name}", param.data), (f"{name}#adam_m", param.adam_m), (f"{name}#adam_v", param.adam_v)]
    for name, state in model.named_batchnorm():
        arrays += [(f"{name}#running_mean", state.running_mean), (f"{name}#running_var", state.running_var)]
    return arrays


def encode_checkpoint(model: Model, epoch: int = 0, history: Optional[List[Dict[str, float]]] = None,
                      manifest_hash: str = '') -> bytes:
    blocks, table, offset = [], [], 0
    for name, array in _arrays(model):
        little = np.ascontiguousarray(array, dtype=array.dtype.newbyteorder('<'))
        raw = little.tobytes()
        table.append({'name': name, 'shape': list(array.shape), 'dtype': little.dtype.str,
                      'offset': offset, 'nbytes': len(raw)})
        blocks.append(raw)
        offset += len(raw)
    header = {
        'kind': model.kind,
        'config': model.config.model_dump(mode='json'),
        'dtype': np.dtype(model.parameters()[0].data.dtype).name,
        'epoch': int(epoch),
        'history': history or [],
        'manifest_hash': manifest_hash,
        'steps': {name: param.step for name, param in model.named_parameters()},
        'blocks': table,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    return _PREAMBLE.pack(MAGIC, VERSION, len(header_bytes)) + header_bytes + b''.join(blocks)


def save_checkpoint(model: Model, path: PathLike, epoch: int = 0,
                    history: Optional[List[Dict[str, float]]] = None, manifest_hash: str = '') -> Path:
    path = atomic_write_bytes(path, encode_checkpoint(model, epoch, history, manifest_hash))
    logger.info("✅ checkpoint written: %s (%s, epoch %d)", path, model.kind, epoch)
    return path


def _parse_header(blob: bytes) -> Tuple[Dict[str, Any], memoryview]:
    if len(blob) < _PREAMBLE.size:
        raise TruncatedPayloadError("checkpoint is shorter than its preamble")
    magic, version, json_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise MagicMismatchError(f"not a checkpoint (magic {magic!r})")
    if version > VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version} (reader supports {VERSION})")
    start = _PREAMBLE.size
    if len(blob) < start + json_len:
        raise TruncatedPayloadError("checkpoint header is truncated")
    header = json.loads(blob[start:start + json_len].decode('utf-8'))
    return header, memoryview(blob)[start + json_len:]


def decode_checkpoint(blob: bytes, expected_kind: Optional[str] = None,
                      expected_config: Optional[BaseModel] = None) -> Checkpoint:
    """
    Rebuild a model from checkpoint bytes.

    Raises:
        CheckpointMismatchError: kind or config differs from what the caller expects
    """
    header, payload = _parse_header(blob)
    kind = header['kind']
    if kind not in MODEL_TYPES:
        raise CheckpointMismatchError(f"unknown model kind '{kind}'")
    if expected_kind is not None and kind != expected_kind:
        raise CheckpointMismatchError(f"checkpoint holds a {kind} model, expected {expected_kind}")
    model_cls, config_cls = MODEL_TYPES[kind]
    try:
        config = config_cls.model_validate(header['config'])
    except ValidationError as e:
        raise CheckpointMismatchError(f"checkpoint config is invalid: {e}") from e
    if expected_config is not None and expected_config != config:
        raise CheckpointMismatchError(f"checkpoint config differs from the requested {kind} config")

    with runtime.using(dtype=header['dtype']):
        model = model_cls(config)

    blocks = {}
    for entry in header['blocks']:
        end = entry['offset'] + entry['nbytes']
        if end > len(payload):
            raise TruncatedPayloadError(f"block {entry['name']} runs past the end of the checkpoint")
        data = np.frombuffer(payload[entry['offset']:end], dtype=np.dtype(entry['dtype']))
        blocks[entry['name']] = data.reshape(entry['shape']).astype(np.dtype(entry['dtype']).newbyteorder('='))

    expected_names = {name for name, _ in _arrays(model)}
    if expected_names != set(blocks):
        raise CheckpointMismatchError("checkpoint tensors do not match the model layout")
    steps = header.get('steps', {})
    for name, param in model.named_parameters():
        param.assign(blocks[name])
        param.adam_m = blocks[f"{name}#adam_m"].copy()
        param.adam_v = blocks[f"{name}#adam_v"].copy()
        param.step = int(steps.get(name, 0))
    for name, state in model.named_batchnorm():
        state.running_mean = blocks[f"{name}#running_mean"].copy()
        state.running_var = blocks[f"{name}#running_var"].copy()
    model.set_mode('infer')
    return Checkpoint(model, int(header.get('epoch', 0)), list(header.get('history', [])),
                      header.get('manifest_hash', ''))


def load_checkpoint(path: PathLike, expected_kind: Optional[str] = None,
                    expected_config: Optional[BaseModel] = None) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), expected_kind, expected_config)


__all__ = ['Checkpoint', 'encode_checkpoint', 'save_checkpoint', 'decode_checkpoint', 'load_checkpoint']
