#!/usr/bin/env python3
"""
Volsr Training Loops
====================

Seeded training of the VAE and the Wasserstein GAN on (LR, HR) pairs.

- Every epoch reshuffles the pairs with a generator seeded once per run.
- Noise (reparameterization eps, generator noise) comes from a second,
  independent stream of the same seed.
- History holds one record of epoch-mean losses per epoch.
- With a validation fraction the trailing pairs are held out and every
  record gains val_loss, the infer-mode MSE on those pairs.
- A NaN / Inf loss aborts with NonFiniteLossError(epoch, batch_index).

Version: 1.0.0
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base import as_batch, epoch_batches, stack_pairs
from .config import DEFAULT_LEARNING_RATES, GanConfig, TrainingConfig, VaeConfig
from .gan import GanModel
from .vae import VaeModel, vae_loss
from ..core.ops import mse
from ..core.optim import adam_step, clip_grad_norm, clip_weights, zero_grad
from ..core.tensor import Tensor, backward
from ..errors import ConfigError, NonFiniteLossError, NumericError

logger = logging.getLogger(__name__)

History = List[Dict[str, float]]


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    shuffle_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(shuffle_seq), np.random.default_rng(noise_seq)


def _check_loss(value: float, epoch: int, batch_index: int) -> None:
    if not np.isfinite(value):
        raise NonFiniteLossError(f"loss became {value} at epoch {epoch}, batch {batch_index}",
                                 epoch=epoch, batch_index=batch_index)


def _learning_rate(training: TrainingConfig, kind: str) -> float:
    return training.learning_rate if training.learning_rate is not None else DEFAULT_LEARNING_RATES[kind]


def _epoch_record(epoch: int, sums: Dict[str, float], count: int) -> Dict[str, float]:
    record = {'epoch': float(epoch)}
    record.update({key: value / max(count, 1) for key, value in sums.items()})
    return record


def split_validation(pairs: Sequence, fraction: float) -> Tuple[Sequence, Sequence]:
    """(train, held_out): the last round(fraction * N) pairs in dataset order are held out"""
    held = int(round(fraction * len(pairs)))
    if held == 0:
        if fraction > 0:
            logger.warning(f"⚠️  validation fraction {fraction} holds out no pairs out of {len(pairs)}")
        return pairs, []
    if held >= len(pairs):
        raise ConfigError(f"validation fraction {fraction} leaves no training pairs out of {len(pairs)}")
    return pairs[:len(pairs) - held], pairs[len(pairs) - held:]


def validation_loss(model, held_out: Sequence) -> float:
    """Mean squared error of the model's infer-mode output against the HR cubes"""
    lr_cubes, hr_cubes = stack_pairs(held_out, range(len(held_out)))
    predicted = np.asarray(model.superresolve(lr_cubes), dtype=np.float64)
    return float(np.mean((predicted - hr_cubes.astype(np.float64)) ** 2))


def train_vae(pairs: Sequence, config: Optional[VaeConfig] = None, training: Optional[TrainingConfig] = None,
              model: Optional[VaeModel] = None) -> Tuple[VaeModel, History]:
    """
    Train the 3D-VAE to map LR cubes onto HR cubes.

    Args:
        pairs: SamplePairs (normalized lr/hr cubes)
        config: model layout (ignored when `model` is given)
        training: epochs, batch size, learning rate, seed, validation fraction
        model: optional model to continue training

    Returns:
        (model, history) where history[i] = {epoch, total, recon, kl[, val_loss]}
    """
    training = training or TrainingConfig()
    if not pairs:
        raise ConfigError("cannot train on an empty dataset")
    model = model or VaeModel(config)
    pairs, held_out = split_validation(pairs, training.validation_fraction)
    edge = model.config.input_size
    lr = _learning_rate(training, 'vae')
    shuffle_rng, noise_rng = _streams(training.seed)
    params = model.parameters()
    history: History = []

    model.set_mode('train')
    for epoch in range(training.epochs):
        sums = {'total': 0.0, 'recon': 0.0, 'kl': 0.0}
        batches = epoch_batches(len(pairs), training.batch_size, shuffle_rng, training.shuffle)
        for b, indices in enumerate(batches):
            lr_cubes, hr_cubes = stack_pairs(pairs, indices)
            x, target = as_batch(lr_cubes, edge), as_batch(hr_cubes, edge)
            eps = noise_rng.standard_normal((len(indices), model.config.latent_dim))
            try:
                x_hat, mu, logvar = model.sample_forward(x, eps)
                total, recon, kl = vae_loss(x_hat, target, mu, logvar, model.config.beta,
                                            model.config.logvar_clamp)
                _check_loss(total.item(), epoch, b)
                backward(total)
                adam_step(params, lr)
            except NonFiniteLossError:
                raise
            except NumericError as e:
                raise NonFiniteLossError(f"{e} (epoch {epoch}, batch {b})", epoch=epoch, batch_index=b) from e
            sums['total'] += total.item()
            sums['recon'] += recon.item()
            sums['kl'] += kl.item()
        record = _epoch_record(epoch, sums, len(batches))
        if held_out:
            record['val_loss'] = validation_loss(model, held_out)
            _check_loss(record['val_loss'], epoch, len(batches))
        history.append(record)
        logger.info("vae epoch %d: total=%.6f recon=%.6f kl=%.6f",
                    epoch, record['total'], record['recon'], record['kl'])
    model.set_mode('infer')
    return model, history


def _critic_score(model: GanModel, x: Tensor) -> Tensor:
    return model.criticize(x).mean()


def train_gan(pairs: Sequence, config: Optional[GanConfig] = None, training: Optional[TrainingConfig] = None,
              model: Optional[GanModel] = None) -> Tuple[GanModel, History]:
    """
    Wasserstein training with n_critic critic updates per generator update.

    Critic loss:    mean(C(fake)) - mean(C(real))
    Generator loss: -mean(C(fake)) + lambda_rec * MSE(fake, real)

    In 'weights' clip mode every critic parameter is clamped to
    [-clip_value, clip_value] after each critic update; in 'grad_norm' mode
    the critic gradient norm is limited instead.

    Each epoch runs max(1, n_batches // n_critic) generator steps; critic
    batches cycle through the epoch's shuffled batches.

    Returns:
        (model, history) where history[i] = {epoch, critic, generator, recon[, val_loss]}
    """
    training = training or TrainingConfig()
    if not pairs:
        raise ConfigError("cannot train on an empty dataset")
    model = model or GanModel(config)
    pairs, held_out = split_validation(pairs, training.validation_fraction)
    cfg = model.config
    edge = cfg.input_size
    lr = _learning_rate(training, 'gan')
    shuffle_rng, noise_rng = _streams(training.seed)
    gen_params = model.generator.parameters()
    critic_params = model.critic.parameters()
    history: History = []

    def noise_like(shape) -> np.ndarray:
        return noise_rng.standard_normal(shape) * cfg.noise_std

    model.set_mode('train')
    for epoch in range(training.epochs):
        sums = {'critic': 0.0, 'generator': 0.0, 'recon': 0.0}
        batches = epoch_batches(len(pairs), training.batch_size, shuffle_rng, training.shuffle)
        steps = max(1, len(batches) // cfg.n_critic)
        cursor = 0
        for step in range(steps):
            try:
                for _ in range(cfg.n_critic):
                    indices = batches[cursor % len(batches)]
                    lr_cubes, hr_cubes = stack_pairs(pairs, indices)
                    x, real = as_batch(lr_cubes, edge), as_batch(hr_cubes, edge)
                    fake = model.generate(x, noise_like(x.shape)).detach()
                    critic_loss = _critic_score(model, fake) - _critic_score(model, real)
                    _check_loss(critic_loss.item(), epoch, cursor)
                    backward(critic_loss)
                    if cfg.clip_mode == 'grad_norm':
                        clip_grad_norm(critic_params, cfg.grad_norm_max)
                    adam_step(critic_params, lr)
                    if cfg.clip_mode == 'weights':
                        clip_weights(critic_params, cfg.clip_value)
                    zero_grad(gen_params)
                    sums['critic'] += critic_loss.item()
                    cursor += 1

                indices = batches[step % len(batches)]
                lr_cubes, hr_cubes = stack_pairs(pairs, indices)
                x, real = as_batch(lr_cubes, edge), as_batch(hr_cubes, edge)
                fake = model.generate(x, noise_like(x.shape))
                recon = mse(fake, real)
                gen_loss = recon * cfg.lambda_rec - _critic_score(model, fake)
                _check_loss(gen_loss.item(), epoch, step)
                backward(gen_loss)
                adam_step(gen_params, lr)
                zero_grad(critic_params)
            except NonFiniteLossError:
                raise
            except NumericError as e:
                raise NonFiniteLossError(f"{e} (epoch {epoch}, step {step})", epoch=epoch, batch_index=step) from e
            sums['generator'] += gen_loss.item()
            sums['recon'] += recon.item()

        record = {
            'epoch': float(epoch),
            'critic': sums['critic'] / (steps * cfg.n_critic),
            'generator': sums['generator'] / steps,
            'recon': sums['recon'] / steps,
        }
        if held_out:
            record['val_loss'] = validation_loss(model, held_out)
            _check_loss(record['val_loss'], epoch, steps)
        history.append(record)
        logger.info("gan epoch %d: critic=%.6f generator=%.6f recon=%.6f",
                    epoch, record['critic'], record['generator'], record['recon'])
    model.set_mode('infer')
    return model, history


__all__ = ['History', 'split_validation', 'validation_loss', 'train_vae', 'train_gan']
