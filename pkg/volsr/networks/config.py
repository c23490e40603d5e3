"""
Model and training configuration (pydantic models, JSON round-trippable).
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError


def _prod(values) -> int:
    return int(np.prod(values)) if values else 1


class VaeConfig(BaseModel):
    """3D-VAE layout: four strided conv blocks, dense trunk, mirrored transpose-conv decoder"""

    model_config = ConfigDict(frozen=True)

    input_size: int = Field(16, ge=1)
    latent_dim: int = Field(16, ge=1)
    encoder_channels: Tuple[int, ...] = (32, 64, 128, 256)
    encoder_strides: Tuple[int, ...] = (1, 2, 2, 2)
    dense_hidden: int = Field(128, ge=1)
    decoder_channels: Tuple[int, ...] = (256, 128, 64, 32)
    decoder_strides: Tuple[int, ...] = (2, 2, 2, 1)
    kernel: int = 3
    beta: float = Field(1e-3, ge=0)
    output_activation: str = 'linear'
    bn_momentum: float = Field(0.9, gt=0, lt=1)
    bn_epsilon: float = Field(1e-5, gt=0)
    logvar_clamp: float = Field(20.0, gt=0)
    seed: int = 0

    @model_validator(mode='after')
    def _check_layout(self) -> 'VaeConfig':
        if len(self.encoder_channels) != 4 or len(self.encoder_strides) != 4:
            raise ValueError("encoder needs exactly 4 channel counts and 4 strides")
        if len(self.decoder_channels) != 4 or len(self.decoder_strides) != 4:
            raise ValueError("decoder needs exactly 4 channel counts and 4 strides")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        if self.output_activation not in ('linear', 'sigmoid'):
            raise ValueError("output_activation must be linear or sigmoid")
        if min(self.encoder_strides + self.decoder_strides) < 1:
            raise ValueError("strides must be >= 1")
        if self.input_size % _prod(self.encoder_strides):
            raise ValueError(f"input_size {self.input_size} not divisible by encoder stride product")
        if self.input_size % _prod(self.decoder_strides):
            raise ValueError(f"input_size {self.input_size} not divisible by decoder stride product")
        return self

    @property
    def terminal_size(self) -> int:
        """Spatial edge reached by the encoder"""
        return self.input_size // _prod(self.encoder_strides)

    @property
    def decoder_start(self) -> int:
        """Spatial edge the decoder dense output is reshaped to"""
        return self.input_size // _prod(self.decoder_strides)

    @property
    def flatten_width(self) -> int:
        return self.terminal_size ** 3 * self.encoder_channels[-1]


class GanConfig(BaseModel):
    """3D-GAN layout: same-resolution U-Net generator and an autoencoding critic"""

    model_config = ConfigDict(frozen=True)

    input_size: int = Field(16, ge=1)
    generator_channels: Tuple[int, ...] = (32, 64, 128, 64, 32)
    generator_output_activation: str = 'linear'
    leaky_alpha: float = Field(0.2, ge=0)
    critic_channels: Tuple[int, ...] = (16, 32, 64, 64, 64)
    critic_strides: Tuple[int, ...] = (1, 2, 2, 1, 1)
    critic_mid_channels: int = 64
    critic_deconv_channels: Tuple[int, ...] = (64, 32, 16, 16)
    critic_deconv_strides: Tuple[int, ...] = (2, 2, 1, 1)
    critic_head: str = 'volumetric'
    kernel: int = 3
    clip_value: float = Field(0.01, gt=0)
    clip_mode: str = 'weights'
    grad_norm_max: float = Field(1.0, gt=0)
    n_critic: int = Field(5, ge=1)
    lambda_rec: float = Field(100.0, ge=0)
    noise_std: float = Field(1.0, ge=0)
    bn_momentum: float = Field(0.9, gt=0, lt=1)
    bn_epsilon: float = Field(1e-5, gt=0)
    seed: int = 0

    @model_validator(mode='after')
    def _check_layout(self) -> 'GanConfig':
        if len(self.generator_channels) != 5:
            raise ValueError("generator needs 5 hidden channel counts")
        if self.generator_output_activation not in ('linear', 'tanh', 'sigmoid'):
            raise ValueError("generator_output_activation must be linear, tanh or sigmoid")
        if len(self.critic_channels) != 5 or len(self.critic_strides) != 5:
            raise ValueError("critic needs exactly 5 conv channel counts and strides")
        if len(self.critic_deconv_channels) != 4 or len(self.critic_deconv_strides) != 4:
            raise ValueError("critic needs exactly 4 deconv channel counts and strides")
        if self.critic_head not in ('volumetric', 'scalar'):
            raise ValueError("critic_head must be volumetric or scalar")
        if self.clip_mode not in ('weights', 'grad_norm'):
            raise ValueError("clip_mode must be weights or grad_norm")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        down = _prod(self.critic_strides)
        if self.input_size % down:
            raise ValueError(f"input_size {self.input_size} not divisible by critic stride product")
        if self.critic_head == 'volumetric' and _prod(self.critic_deconv_strides) != down:
            raise ValueError("critic deconv strides must undo the conv strides for a volumetric head")
        return self

    @property
    def critic_terminal_size(self) -> int:
        return self.input_size // _prod(self.critic_strides)


class TrainingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(50, ge=0)
    batch_size: int = Field(32, ge=1)
    learning_rate: Optional[float] = Field(None, gt=0)
    seed: int = 0
    shuffle: bool = True
    # trailing share of the pairs held out for per-epoch validation
    validation_fraction: float = Field(0.0, ge=0, lt=1)


DEFAULT_LEARNING_RATES = {'vae': 1e-3, 'gan': 5e-5}


def build_config(cls, **kwargs):
    """Construct a config model, reporting violations as ConfigError"""
    try:
        return cls(**kwargs)
    except ValidationError as e:
        raise ConfigError(f"invalid {cls.__name__}: {e.errors()[0]['msg']}") from e


__all__ = ['VaeConfig', 'GanConfig', 'TrainingConfig', 'DEFAULT_LEARNING_RATES', 'build_config']
