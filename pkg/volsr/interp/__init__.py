"""
Volsr interpolation baselines: nearest, trilinear, Catmull-Rom cubic, Lanczos-3.
"""

from .kernels import KERNELS, KernelSpec, get_kernel, kernel_weights
from .resample import aligned_positions, lift_to_grid, resample3d, resample_to_shape, scaled_shape, weight_matrix

BASELINE_KINDS = ('nearest', 'trilinear', 'cubic_catmull_rom', 'lanczos3')

__all__ = [
    'BASELINE_KINDS',
    'KERNELS',
    'KernelSpec',
    'get_kernel',
    'kernel_weights',
    'aligned_positions',
    'weight_matrix',
    'resample_to_shape',
    'scaled_shape',
    'resample3d',
    'lift_to_grid',
]
