"""
Patch specification and per-component normalization statistics.
"""

import logging
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError
from ..io.volume import COMPONENT_LABELS, VolumeField

logger = logging.getLogger(__name__)

PATCH_OUT = 16
UPSAMPLE_METHODS = ('trilinear', 'nearest')


class PatchSpec(BaseModel):
    """
    Sliding-window sampling parameters.

    A is the coarsening factor, s the window stride and q = A * s the edge of
    every extracted cube. The high-resolution target is the central 16^3 block
    of each cube; the low-resolution input is the cube subsampled by A and
    upsampled back to 16^3.
    """

    model_config = ConfigDict(frozen=True)

    A: int = Field(4, ge=1)
    s: int = Field(4, ge=1)
    q: Optional[int] = None
    patch_out: int = PATCH_OUT
    upsample_method: str = 'trilinear'
    component: str = 'u'
    prefilter: bool = False

    @model_validator(mode='before')
    @classmethod
    def _derive_q(cls, values: Any) -> Any:
        if isinstance(values, dict) and values.get('q') is None:
            values = dict(values)
            values['q'] = values.get('A', 4) * values.get('s', 4)
        return values

    @model_validator(mode='after')
    def _check_geometry(self) -> 'PatchSpec':
        if self.patch_out != PATCH_OUT:
            raise ValueError(f"patch_out is fixed at {PATCH_OUT}")
        if self.q != self.A * self.s:
            raise ValueError(f"q must equal A*s ({self.A}*{self.s}={self.A * self.s}), got {self.q}")
        if self.q < self.patch_out:
            raise ValueError(f"q={self.q} is smaller than the {self.patch_out}^3 center crop")
        if self.q % self.A:
            raise ValueError(f"q={self.q} is not divisible by A={self.A}")
        if self.upsample_method not in UPSAMPLE_METHODS:
            raise ValueError(f"upsample_method must be one of {UPSAMPLE_METHODS}")
        if self.component not in COMPONENT_LABELS:
            raise ValueError(f"component must be one of {COMPONENT_LABELS}")
        return self

    @classmethod
    def build(cls, **kwargs) -> 'PatchSpec':
        """Construct, reporting violations as ConfigError"""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise ConfigError(f"invalid patch spec: {e.errors()[0]['msg']}") from e

    @property
    def lr_edge(self) -> int:
        return self.q // self.A


class NormStats(BaseModel):
    """Standardization statistics of one component, from the training field only"""

    model_config = ConfigDict(frozen=True)

    component: str
    mean: float
    std: float = Field(gt=0)


def compute_norm_stats(volume: VolumeField, component: str) -> NormStats:
    grid = volume.component(component).astype(np.float64)
    mean = float(grid.mean())
    std = float(grid.std())
    if std == 0.0:
        logger.warning("⚠️ component %s has zero variance; using std=1.0", component)
        std = 1.0
    return NormStats(component=component, mean=mean, std=std)


def apply_norm(values: np.ndarray, stats: NormStats) -> np.ndarray:
    values = np.asarray(values)
    return ((values - stats.mean) / stats.std).astype(values.dtype, copy=False)


def invert_norm(values: np.ndarray, stats: NormStats) -> np.ndarray:
    values = np.asarray(values)
    return (values * stats.std + stats.mean).astype(values.dtype, copy=False)


__all__ = [
    'PATCH_OUT',
    'UPSAMPLE_METHODS',
    'PatchSpec',
    'NormStats',
    'compute_norm_stats',
    'apply_norm',
    'invert_norm',
]
