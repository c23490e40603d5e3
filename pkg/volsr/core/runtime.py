"""
Runtime switches shared by the tensor engine and the patch-level workers.

- default dtype: float32 for training, float64 for verification oracles
- strict deterministic mode: serial reductions, canonical summation order
- thread budget for patch-level parallelism
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, List, Optional, TypeVar

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

_SUPPORTED_DTYPES = {
    'float32': np.float32,
    'float64': np.float64,
}

_state = {
    'dtype': np.float32,
    'strict': False,
    'threads': 1,
}


def resolve_dtype(dtype) -> type:
    """Map 'float32' / 'float64' / numpy dtype to a numpy scalar type"""
    if isinstance(dtype, str):
        if dtype not in _SUPPORTED_DTYPES:
            raise ConfigError(f"Unsupported dtype '{dtype}' (use float32 or float64)")
        return _SUPPORTED_DTYPES[dtype]
    dt = np.dtype(dtype).type
    if dt not in (np.float32, np.float64):
        raise ConfigError(f"Unsupported dtype {dtype}")
    return dt


def default_dtype() -> type:
    return _state['dtype']


def set_default_dtype(dtype) -> None:
    _state['dtype'] = resolve_dtype(dtype)


def strict_deterministic() -> bool:
    return _state['strict']


def set_strict_deterministic(enabled: bool) -> None:
    _state['strict'] = bool(enabled)


def num_threads() -> int:
    return _state['threads']


def set_num_threads(threads: int) -> None:
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    _state['threads'] = int(threads)


@contextmanager
def using(dtype=None, strict: Optional[bool] = None, threads: Optional[int] = None) -> Iterator[None]:
    """
    Temporarily override runtime switches

    Usage:
        with runtime.using(dtype='float64', strict=True):
            ...
    """
    saved = dict(_state)
    try:
        if dtype is not None:
            set_default_dtype(dtype)
        if strict is not None:
            set_strict_deterministic(strict)
        if threads is not None:
            set_num_threads(threads)
        yield
    finally:
        _state.update(saved)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """
    Apply fn to every item, possibly in parallel, returning results in input order.

    Runs serially when strict deterministic mode is on or the thread budget is 1.
    """
    items = list(items)
    if strict_deterministic() or num_threads() == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=num_threads()) as pool:
        return list(pool.map(fn, items))
