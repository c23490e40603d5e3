#!/usr/bin/env python3
"""
Volsr 3D Variational Autoencoder
================================

Encoder (16^3 x 1 input, default layout):

    Conv3D 32  s1 BN ReLU   -> 16^3 x 32
    Conv3D 64  s2 BN ReLU   ->  8^3 x 64
    Conv3D 128 s2 BN ReLU   ->  4^3 x 128
    Conv3D 256 s2 BN ReLU   ->  2^3 x 256
    flatten                 ->  2048
    Dense 128 BN ReLU       ->  128
    Dense mu / Dense logvar ->  16, 16

Decoder:

    Dense 2^3*256 BN ReLU, reshape -> 2^3 x 256
    ConvT 256 s2 / 128 s2 / 64 s2 / 32 s1, each BN ReLU -> 16^3 x 32
    ConvT 1 s1, linear or sigmoid -> 16^3 x 1

The model super-resolves by encoding the LR cube and decoding the
posterior mean; training draws z = mu + exp(0.5 * logvar) * eps.

Version: 1.0.0
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from .base import INFER_BATCH, as_batch, batch_slices
from .config import VaeConfig
from ..core.layers import Block, Conv3D, Conv3DTranspose, Dense, Layer
from ..core.ops import activation, mse
from ..core.tensor import Tensor
from ..errors import ShapeError

logger = logging.getLogger(__name__)

ShapeChain = List[Tuple[str, Tuple[int, ...]]]


def reparameterize(mu: Tensor, logvar: Tensor, eps: np.ndarray, clamp: float = 20.0) -> Tensor:
    """
    z = mu + exp(0.5 * clip(logvar, -clamp, clamp)) * eps

    eps is a constant; gradients reach mu and logvar only.
    """
    if mu.shape != logvar.shape or mu.shape != np.shape(eps):
        raise ShapeError(f"reparameterize shape mismatch: {mu.shape}, {logvar.shape}, {np.shape(eps)}")
    sigma = (logvar.clip(-clamp, clamp) * 0.5).exp()
    return mu + sigma * Tensor(np.asarray(eps, dtype=mu.data.dtype))


def kl_divergence(mu: Tensor, logvar: Tensor, clamp: float = 20.0) -> Tensor:
    """-0.5 * sum_j (1 + logvar - mu^2 - exp(logvar)), averaged over the batch"""
    lv = logvar.clip(-clamp, clamp)
    per_element = mu.square() + lv.exp() - lv - 1.0
    return per_element.sum() * (0.5 / mu.shape[0])


def vae_loss(x_hat: Tensor, x: Tensor, mu: Tensor, logvar: Tensor, beta: float,
             clamp: float = 20.0) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Returns:
        (total, recon, kl) with recon = voxel MSE and total = recon + beta * kl
    """
    recon = mse(x_hat, x)
    kl = kl_divergence(mu, logvar, clamp)
    return recon + kl * beta, recon, kl


class VaeModel(Layer):
    """3D-VAE super-resolver"""

    kind = 'vae'

    def __init__(self, config: Optional[VaeConfig] = None):
        super().__init__('vae')
        self.config = config or VaeConfig()
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        bn = dict(momentum=cfg.bn_momentum, epsilon=cfg.bn_epsilon)

        self.encoder: List[Block] = []
        cin = 1
        for i, (cout, stride) in enumerate(zip(cfg.encoder_channels, cfg.encoder_strides), start=1):
            conv = Conv3D('main', cin, cout, cfg.kernel, stride, rng=rng)
            self.encoder.append(Block(f'enc{i}', conv, cout, act='relu', **bn))
            cin = cout
        self.hidden = Block('hidden', Dense('main', cfg.flatten_width, cfg.dense_hidden, rng=rng),
                            cfg.dense_hidden, act='relu', **bn)
        self.mu_head = Dense('mu', cfg.dense_hidden, cfg.latent_dim, rng=rng)
        self.logvar_head = Dense('logvar', cfg.dense_hidden, cfg.latent_dim, rng=rng)

        start, c0 = cfg.decoder_start, cfg.encoder_channels[-1]
        self.expand = Block('expand', Dense('main', cfg.latent_dim, start ** 3 * c0, rng=rng),
                            start ** 3 * c0, act='relu', **bn)
        self.decoder: List[Block] = []
        cin = c0
        for i, (cout, stride) in enumerate(zip(cfg.decoder_channels, cfg.decoder_strides), start=1):
            deconv = Conv3DTranspose('main', cin, cout, cfg.kernel, stride, rng=rng)
            self.decoder.append(Block(f'dec{i}', deconv, cout, act='relu', **bn))
            cin = cout
        self.output = Conv3DTranspose('output', cin, 1, cfg.kernel, 1, rng=rng)

        self.shape_chain = self._shape_chain()
        assert self.shape_chain[-1][1] == (cfg.input_size,) * 3 + (1,)

    def _shape_chain(self) -> ShapeChain:
        cfg = self.config
        chain: ShapeChain = [('input', (cfg.input_size,) * 3 + (1,))]
        edge = cfg.input_size
        for block, cout, stride in zip(self.encoder, cfg.encoder_channels, cfg.encoder_strides):
            edge = -(-edge // stride)
            chain.append((block.name, (edge,) * 3 + (cout,)))
        assert edge == cfg.terminal_size
        chain.append(('flatten', (cfg.flatten_width,)))
        chain.append(('hidden', (cfg.dense_hidden,)))
        chain.append(('latent', (cfg.latent_dim,)))
        chain.append(('expand', (cfg.decoder_start ** 3 * cfg.encoder_channels[-1],)))
        edge = cfg.decoder_start
        chain.append(('reshape', (edge,) * 3 + (cfg.encoder_channels[-1],)))
        for block, cout, stride in zip(self.decoder, cfg.decoder_channels, cfg.decoder_strides):
            edge *= stride
            chain.append((block.name, (edge,) * 3 + (cout,)))
        chain.append(('output', (edge,) * 3 + (1,)))
        return chain

    def children(self):
        return self.encoder + [self.hidden, self.mu_head, self.logvar_head, self.expand] + self.decoder + [self.output]

    def encode(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        """[N, e, e, e, 1] -> (mu, logvar), each [N, latent_dim]"""
        edge = self.config.input_size
        if x.ndim != 5 or x.shape[1:] != (edge, edge, edge, 1):
            raise ShapeError(f"VAE input must be [N,{edge},{edge},{edge},1], got {x.shape}")
        h = x
        for block in self.encoder:
            h = block(h)
        h = self.hidden(h.flatten_batch())
        return self.mu_head(h), self.logvar_head(h)

    def decode(self, z: Tensor) -> Tensor:
        """[N, latent_dim] -> [N, e, e, e, 1]"""
        cfg = self.config
        if z.ndim != 2 or z.shape[1] != cfg.latent_dim:
            raise ShapeError(f"latent must be [N,{cfg.latent_dim}], got {z.shape}")
        start = cfg.decoder_start
        h = self.expand(z).reshape(z.shape[0], start, start, start, cfg.encoder_channels[-1])
        for block in self.decoder:
            h = block(h)
        return activation(self.output(h), cfg.output_activation)

    def sample_forward(self, x: Tensor, eps: np.ndarray) -> Tuple[Tensor, Tensor, Tensor]:
        """Training pass: (x_hat, mu, logvar) with z drawn using the given noise"""
        mu, logvar = self.encode(x)
        z = reparameterize(mu, logvar, eps, self.config.logvar_clamp)
        return self.decode(z), mu, logvar

    def forward(self, x: Tensor) -> Tensor:
        mu, _ = self.encode(x)
        return self.decode(mu)

    def superresolve(self, lr_cubes: np.ndarray) -> np.ndarray:
        """Decode the posterior mean of every cube in infer mode"""
        edge = self.config.input_size
        batch = as_batch(lr_cubes, edge)
        previous = self.mode
        self.set_mode('infer')
        try:
            outputs = [self.forward(Tensor(batch.data[s])).data[..., 0]
                       for s in batch_slices(batch.shape[0], INFER_BATCH)]
        finally:
            self.set_mode(previous)
        out = np.concatenate(outputs, axis=0)
        return out if np.ndim(lr_cubes) == 4 else out[0]


__all__ = ['reparameterize', 'kl_divergence', 'vae_loss', 'VaeModel']
