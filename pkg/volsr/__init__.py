#!/usr/bin/env python3
"""
Volsr - Volumetric Super-Resolution of Turbulent Velocity Fields
================================================================

Patch-based 3D super-resolution of channel-flow velocity fields: a
numpy reverse-mode tensor core, the VAE and Wasserstein-GAN super-resolvers
built on it, interpolation baselines, a patch sampler and stitcher, and a
Fourier-domain evaluation report.

Version: 1.0.0
"""

__version__ = '1.0.0'

from .errors import VolsrError

__all__ = ['__version__', 'VolsrError']
