"""
Common interface of every super-resolver (VAE, GAN, passthrough).

A super-resolver maps a batch of normalized LR cubes [N, 16, 16, 16] to HR
predictions of the same shape.
"""

import logging
from typing import Iterator, List, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from ..core import runtime
from ..core.tensor import Tensor
from ..errors import ShapeError

logger = logging.getLogger(__name__)

INFER_BATCH = 32


@runtime_checkable
class SuperResolver(Protocol):
    kind: str

    def superresolve(self, lr_cubes: np.ndarray) -> np.ndarray:
        """[N, e, e, e] normalized LR cubes -> [N, e, e, e] predictions"""
        ...


class PassthroughModel:
    """Identity super-resolver: returns the LR input unchanged"""

    kind = 'passthrough'

    def superresolve(self, lr_cubes: np.ndarray) -> np.ndarray:
        return np.array(lr_cubes, copy=True)


def as_batch(cubes: np.ndarray, edge: int) -> Tensor:
    """[N, e, e, e] (or a single [e, e, e]) array -> [N, e, e, e, 1] Tensor in the runtime dtype"""
    cubes = np.asarray(cubes)
    if cubes.ndim == 3:
        cubes = cubes[None]
    if cubes.ndim != 4 or cubes.shape[1:] != (edge, edge, edge):
        raise ShapeError(f"expected cubes of shape [N,{edge},{edge},{edge}], got {cubes.shape}")
    return Tensor(cubes[..., None].astype(runtime.default_dtype()))


def stack_pairs(pairs: Sequence, indices: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    lr = np.stack([pairs[i].lr for i in indices])
    hr = np.stack([pairs[i].hr for i in indices])
    return lr, hr


def batch_slices(count: int, batch_size: int) -> Iterator[slice]:
    for start in range(0, count, batch_size):
        yield slice(start, min(start + batch_size, count))


def epoch_batches(count: int, batch_size: int, rng: np.random.Generator, shuffle: bool = True) -> List[np.ndarray]:
    order = rng.permutation(count) if shuffle else np.arange(count)
    return [order[s] for s in batch_slices(count, batch_size)]


__all__ = [
    'SuperResolver',
    'PassthroughModel',
    'as_batch',
    'stack_pairs',
    'batch_slices',
    'epoch_batches',
    'INFER_BATCH',
]
