"""
Interpolation kernels for the separable resamplers.

A sample at fractional position base + t (0 <= t < 1) draws on the taps
base + o for every offset o of the kernel, with weight K(t - o). Weights are
renormalized to sum to 1 at every position.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from ..errors import ContractViolationError

KEYS_A = -0.5
LANCZOS_A = 3


def _linear(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(x))


def _catmull_rom(x: np.ndarray) -> np.ndarray:
    a = KEYS_A
    ax = np.abs(x)
    inner = (a + 2.0) * ax ** 3 - (a + 3.0) * ax ** 2 + 1.0
    outer = a * ax ** 3 - 5.0 * a * ax ** 2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def _lanczos3(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) < LANCZOS_A, np.sinc(x) * np.sinc(x / LANCZOS_A), 0.0)


def _nearest(x: np.ndarray) -> np.ndarray:
    # half-open: t = 0.5 resolves to the upper tap, matching floor(c + 0.5)
    return ((x >= -0.5) & (x < 0.5)).astype(np.float64)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel definition: tap offsets and the continuous kernel function"""

    kind: str
    radius: int
    offsets: Tuple[int, ...]
    function: Callable[[np.ndarray], np.ndarray]
    normalize_weights: bool = True


KERNELS: Dict[str, KernelSpec] = {
    'nearest': KernelSpec('nearest', 1, (0, 1), _nearest),
    'trilinear': KernelSpec('trilinear', 1, (0, 1), _linear),
    'cubic_catmull_rom': KernelSpec('cubic_catmull_rom', 2, (-1, 0, 1, 2), _catmull_rom),
    'lanczos3': KernelSpec('lanczos3', 3, (-2, -1, 0, 1, 2, 3), _lanczos3),
}


def get_kernel(kind: str) -> KernelSpec:
    try:
        return KERNELS[kind]
    except KeyError:
        raise ContractViolationError(f"unknown interpolation kind '{kind}' (expected one of {sorted(KERNELS)})")


def kernel_weights(kind: str, t) -> np.ndarray:
    """
    Normalized tap weights at fractional offset t.

    Args:
        kind: nearest | trilinear | cubic_catmull_rom | lanczos3
        t: scalar or array of offsets in [0, 1)

    Returns:
        np.ndarray: [..., n_taps] weights, each row summing to 1
    """
    spec = get_kernel(kind)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t >= 1.0):
        raise ContractViolationError("fractional offset must lie in [0, 1)")
    offsets = np.asarray(spec.offsets, dtype=np.float64)
    weights = spec.function(t[..., None] - offsets)
    return weights / weights.sum(axis=-1, keepdims=True)


__all__ = ['KernelSpec', 'KERNELS', 'get_kernel', 'kernel_weights']
