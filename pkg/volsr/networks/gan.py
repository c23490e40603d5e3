#!/usr/bin/env python3
"""
Volsr 3D Wasserstein GAN
========================

Generator: a same-resolution U-Net on the channelwise concatenation of the
upsampled LR cube and a noise cube.

    c1 Conv 32  LeakyReLU          -> e1
    c2 Conv 64  BN LeakyReLU       -> e2
    c3 Conv 128 BN LeakyReLU       -> e3
    c4 Conv 64  BN LeakyReLU       -> d4
    c5 Conv 32  BN LeakyReLU on concat(d4, e2) -> d5
    c6 Conv 1   output activation on concat(d5, e1)

Critic ("volumetric" head): five strided conv blocks, one plain conv, four
transpose-conv blocks and a transpose-conv output, emitting a 16^3 score
map. The "scalar" head replaces the transpose-conv tail by flatten + dense.

Version: 1.0.0
"""

import logging
from typing import List, Optional

import numpy as np

from .base import INFER_BATCH, as_batch, batch_slices
from .config import GanConfig
from ..core.layers import Block, Conv3D, Conv3DTranspose, Dense, Layer
from ..core.ops import activation
from ..core.tensor import Tensor, concat
from ..errors import ShapeError

logger = logging.getLogger(__name__)


class Generator(Layer):
    def __init__(self, config: GanConfig, rng: np.random.Generator):
        super().__init__('generator')
        g = config.generator_channels
        k, alpha = config.kernel, config.leaky_alpha
        bn = dict(momentum=config.bn_momentum, epsilon=config.bn_epsilon)
        self.config = config
        self.c1 = Block('c1', Conv3D('main', 2, g[0], k, 1, rng=rng), g[0], use_bn=False,
                        act='leaky_relu', alpha=alpha)
        self.c2 = Block('c2', Conv3D('main', g[0], g[1], k, 1, rng=rng), g[1], act='leaky_relu', alpha=alpha, **bn)
        self.c3 = Block('c3', Conv3D('main', g[1], g[2], k, 1, rng=rng), g[2], act='leaky_relu', alpha=alpha, **bn)
        self.c4 = Block('c4', Conv3D('main', g[2], g[3], k, 1, rng=rng), g[3], act='leaky_relu', alpha=alpha, **bn)
        self.c5 = Block('c5', Conv3D('main', g[3] + g[1], g[4], k, 1, rng=rng), g[4],
                        act='leaky_relu', alpha=alpha, **bn)
        self.c6 = Conv3D('c6', g[4] + g[0], 1, k, 1, rng=rng)

    def children(self):
        return [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6]

    def forward(self, x: Tensor) -> Tensor:
        """x: [N, e, e, e, 2] (LR cube and noise along channels)"""
        if x.ndim != 5 or x.shape[-1] != 2:
            raise ShapeError(f"generator input must have 2 channels, got {x.shape}")
        e1 = self.c1(x)
        e2 = self.c2(e1)
        e3 = self.c3(e2)
        d4 = self.c4(e3)
        d5 = self.c5(concat([d4, e2]))
        out = self.c6(concat([d5, e1]))
        return activation(out, self.config.generator_output_activation)


class Critic(Layer):
    def __init__(self, config: GanConfig, rng: np.random.Generator):
        super().__init__('critic')
        k, alpha = config.kernel, config.leaky_alpha
        bn = dict(momentum=config.bn_momentum, epsilon=config.bn_epsilon)
        self.config = config
        self.convs: List[Block] = []
        cin = 1
        for i, (cout, stride) in enumerate(zip(config.critic_channels, config.critic_strides), start=1):
            self.convs.append(Block(f'conv{i}', Conv3D('main', cin, cout, k, stride, rng=rng), cout,
                                    act='leaky_relu', alpha=alpha, **bn))
            cin = cout
        self.conv6 = Block('conv6', Conv3D('main', cin, config.critic_mid_channels, k, 1, rng=rng),
                           config.critic_mid_channels, use_bn=False, act='leaky_relu', alpha=alpha)
        cin = config.critic_mid_channels
        self.deconvs: List[Block] = []
        self.output: Layer
        if config.critic_head == 'volumetric':
            for i, (cout, stride) in enumerate(zip(config.critic_deconv_channels, config.critic_deconv_strides), 1):
                self.deconvs.append(Block(f'deconv{i}', Conv3DTranspose('main', cin, cout, k, stride, rng=rng),
                                          cout, act='leaky_relu', alpha=alpha, **bn))
                cin = cout
            self.output = Conv3DTranspose('output', cin, 1, k, 1, rng=rng)
        else:
            width = config.critic_terminal_size ** 3 * cin
            self.output = Dense('output', width, 1, rng=rng)

    def children(self):
        return self.convs + [self.conv6] + self.deconvs + [self.output]

    def forward(self, x: Tensor) -> Tensor:
        """[N, e, e, e, 1] -> score map [N, e, e, e, 1] (volumetric) or [N, 1] (scalar)"""
        h = x
        for block in self.convs:
            h = block(h)
        h = self.conv6(h)
        if self.config.critic_head == 'scalar':
            return self.output(h.flatten_batch())
        for block in self.deconvs:
            h = block(h)
        return self.output(h)


class GanModel(Layer):
    """3D-GAN super-resolver (generator plus Wasserstein critic)"""

    kind = 'gan'

    def __init__(self, config: Optional[GanConfig] = None):
        super().__init__('gan')
        self.config = config or GanConfig()
        rng = np.random.default_rng(self.config.seed)
        self.generator = Generator(self.config, rng)
        self.critic = Critic(self.config, rng)

    def children(self):
        return [self.generator, self.critic]

    def generate(self, lr: Tensor, noise: np.ndarray) -> Tensor:
        if np.shape(noise) != lr.shape:
            raise ShapeError(f"noise shape {np.shape(noise)} does not match input {lr.shape}")
        return self.generator(concat([lr, Tensor(np.asarray(noise, dtype=lr.data.dtype))]))

    def criticize(self, x: Tensor) -> Tensor:
        return self.critic(x)

    def forward(self, x: Tensor) -> Tensor:
        return self.generate(x, np.zeros(x.shape))

    def superresolve(self, lr_cubes: np.ndarray) -> np.ndarray:
        """Generator output with zero noise, in infer mode"""
        batch = as_batch(lr_cubes, self.config.input_size)
        previous = self.generator.mode
        self.generator.set_mode('infer')
        try:
            outputs = [self.forward(Tensor(batch.data[s])).data[..., 0]
                       for s in batch_slices(batch.shape[0], INFER_BATCH)]
        finally:
            self.generator.set_mode(previous)
        out = np.concatenate(outputs, axis=0)
        return out if np.ndim(lr_cubes) == 4 else out[0]


__all__ = ['Generator', 'Critic', 'GanModel']
