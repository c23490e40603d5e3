#!/usr/bin/env python3
"""
Volsr Synthetic Turbulence
==========================

Deterministic turbulence-like velocity fields built from random Fourier
modes. Each component is a sum of cosine modes with integer wavevectors,
periodic in x and z, multiplied by a sin envelope in y so both walls carry
exactly zero velocity. Mode amplitudes follow |k|^(exponent/2), so mode
power falls off as |k|^exponent (Kolmogorov -5/3 by default).

The output is not divergence free; the pipeline only consumes scalar
components.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .volume import COMPONENT_LABELS, VolumeField
from ..core import runtime
from ..errors import ContractViolationError

logger = logging.getLogger(__name__)

CHANNEL_DOMAIN = (8.0 * np.pi, 2.0, 3.0 * np.pi)


@dataclass(frozen=True)
class ModeTable:
    """
    Random Fourier modes of one component.

    Attributes:
        wavevectors: [M, 3] integer wavenumbers (kx, ky, kz), never all zero
        magnitudes: [M] |k|
        amplitudes: [M] mode amplitudes, proportional to |k|^(exponent/2)
        phases: [M] phases in [0, 2*pi)
    """

    wavevectors: np.ndarray
    magnitudes: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray

    @property
    def power(self) -> np.ndarray:
        return self.amplitudes ** 2


def _check_args(dims, domain, num_modes, max_wavenumber, components):
    if len(dims) != 3 or min(dims) < 8:
        raise ContractViolationError(f"synthetic fields need dims >= 8^3, got {tuple(dims)}")
    if len(domain) != 3 or min(domain) <= 0:
        raise ContractViolationError(f"domain extents must be > 0, got {tuple(domain)}")
    if num_modes < 1:
        raise ContractViolationError(f"num_modes must be >= 1, got {num_modes}")
    if max_wavenumber < 1:
        raise ContractViolationError(f"max_wavenumber must be >= 1, got {max_wavenumber}")
    unknown = set(components) - set(COMPONENT_LABELS)
    if unknown or not components:
        raise ContractViolationError(f"components must be a subset of {COMPONENT_LABELS}, got {components}")


def synth_modes(seed: int, num_modes: int = 64, spectrum_exponent: float = -5.0 / 3.0,
                max_wavenumber: int = 8, components: Sequence[str] = COMPONENT_LABELS) -> Dict[str, ModeTable]:
    """
    Draw the mode table of every component.

    Args:
        seed: RNG seed; identical arguments give identical tables
        num_modes: modes per component
        spectrum_exponent: power-law exponent of mode power versus |k|
        max_wavenumber: wavenumbers are drawn from [-max, max] (ky from [1, max])

    Returns:
        Dict[str, ModeTable]: one table per component, in the given order
    """
    rng = np.random.default_rng(seed)
    tables = {}
    for name in components:
        k = np.empty((num_modes, 3), dtype=np.int64)
        for m in range(num_modes):
            while True:
                kx, kz = rng.integers(-max_wavenumber, max_wavenumber + 1, size=2)
                ky = rng.integers(0, max_wavenumber + 1)
                if kx or ky or kz:
                    break
            k[m] = (kx, ky, kz)
        magnitudes = np.sqrt(np.sum(k.astype(np.float64) ** 2, axis=1))
        raw = magnitudes ** (spectrum_exponent / 2.0)
        # unit variance of the envelope-free sum
        amplitudes = raw / np.sqrt(0.5 * np.sum(raw ** 2))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=num_modes)
        tables[name] = ModeTable(k, magnitudes, amplitudes, phases)
    return tables


def _wall_coordinates(dy: int) -> Tuple[np.ndarray, np.ndarray]:
    """eta in [-1, 1] across the channel and the sin envelope (exactly 0 at both walls)"""
    eta = np.linspace(-1.0, 1.0, dy)
    envelope = np.sin(0.5 * np.pi * (eta + 1.0))
    envelope[0] = 0.0
    envelope[-1] = 0.0
    return eta, envelope


def synth_field(dims: Tuple[int, int, int], domain: Tuple[float, float, float] = CHANNEL_DOMAIN,
                seed: int = 0, num_modes: int = 64, spectrum_exponent: float = -5.0 / 3.0,
                components: Sequence[str] = COMPONENT_LABELS, mean_velocity: float = 0.0,
                max_wavenumber: int = 8, time_tag: int = 0, dtype=np.float64) -> VolumeField:
    """
    Generate a synthetic channel-like velocity field.

    Grid points are x_i = i*Lx/Dx and z_k = k*Lz/Dz (periodic), and y runs
    wall to wall over Dy points. A mode with wavevector (kx, ky, kz) varies as
    cos(2*pi*kx*x/Lx + pi*ky*y/Ly + 2*pi*kz*z/Lz + phase).

    Args:
        dims: (Dx, Dy, Dz), each >= 8
        domain: (Lx, Ly, Lz)
        seed: RNG seed
        components: subset of ('u', 'v', 'w')
        mean_velocity: centreline value of a parabolic mean profile added to u

    Returns:
        VolumeField: fully determined by the arguments
    """
    dims = tuple(int(d) for d in dims)
    domain = tuple(float(v) for v in domain)
    components = tuple(components)
    _check_args(dims, domain, num_modes, max_wavenumber, components)
    dtype = runtime.resolve_dtype(dtype)

    dx, dy, dz = dims
    lx, ly, lz = domain
    x = np.arange(dx) * (lx / dx)
    z = np.arange(dz) * (lz / dz)
    eta, envelope = _wall_coordinates(dy)
    y = 0.5 * (eta + 1.0) * ly

    tables = synth_modes(seed, num_modes, spectrum_exponent, max_wavenumber, components)
    data = {}
    for name in components:
        table = tables[name]
        grid = np.zeros(dims, dtype=np.float64)
        for (kx, ky, kz), amp, phase in zip(table.wavevectors, table.amplitudes, table.phases):
            ax = 2.0 * np.pi * kx * x / lx + phase
            ay = np.pi * ky * y / ly
            az = 2.0 * np.pi * kz * z / lz
            grid += amp * np.cos(ax[:, None, None] + ay[None, :, None] + az[None, None, :])
        grid *= envelope[None, :, None]
        if name == 'u' and mean_velocity:
            grid += mean_velocity * (1.0 - eta ** 2)[None, :, None]
        data[name] = grid.astype(dtype)
    logger.debug("synthesized %s field dims=%s seed=%d", ','.join(components), dims, seed)
    return VolumeField(dims, components, domain, time_tag, data)


__all__ = ['CHANNEL_DOMAIN', 'ModeTable', 'synth_modes', 'synth_field']
