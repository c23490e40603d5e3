"""
2D discrete Fourier analysis of plane slices.

Coefficients are the unnormalized forward DFT, shifted so the zero
frequency sits at index (n1 // 2, n2 // 2). Power-of-two extents use the
FFT; other extents use the direct DFT as a matrix product.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..errors import ContractViolationError
from ..io.planes import Plane2D

logger = logging.getLogger(__name__)

AMPLITUDE_FLOOR = 1e-20
PHASE_THRESHOLD = 1e-12
LOG_BASE = 'e'
PHASE_CONVENTION = 'atan2(Im, Re) in (-pi, pi]; 0 where |F| < 1e-12'


@dataclass
class Spectrum2D:
    """Centered DFT coefficients of a plane"""

    coefficients: np.ndarray
    plane_shape: Tuple[int, int]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.coefficients)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def fft2d(plane: Union[Plane2D, np.ndarray]) -> Spectrum2D:
    values = plane.values if isinstance(plane, Plane2D) else np.asarray(plane)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or min(values.shape) < 2:
        raise ContractViolationError(f"fft2d needs a plane of at least 2x2, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ContractViolationError("fft2d received non-finite values")
    n1, n2 = values.shape
    if _is_power_of_two(n1) and _is_power_of_two(n2):
        coefficients = np.fft.fft2(values)
    else:
        coefficients = dft_matrix(n1) @ values @ dft_matrix(n2).T
    return Spectrum2D(np.fft.fftshift(coefficients), (n1, n2))


def amplitude_map(spectrum: Spectrum2D) -> np.ndarray:
    """ln(|F| + 1e-20)"""
    return np.log(spectrum.magnitude + AMPLITUDE_FLOOR)


def phase_map(spectrum: Spectrum2D) -> np.ndarray:
    c = spectrum.coefficients
    phase = np.arctan2(c.imag, c.real)
    phase[phase <= -np.pi] = np.pi
    phase[spectrum.magnitude < PHASE_THRESHOLD] = 0.0
    return phase


__all__ = [
    'AMPLITUDE_FLOOR',
    'LOG_BASE',
    'PHASE_CONVENTION',
    'Spectrum2D',
    'dft_matrix',
    'fft2d',
    'amplitude_map',
    'phase_map',
]
