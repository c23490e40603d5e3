"""
Volsr super-resolution models: 3D-VAE, 3D-GAN, training loops, checkpoints.
"""

from .base import PassthroughModel, SuperResolver
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import DEFAULT_LEARNING_RATES, GanConfig, TrainingConfig, VaeConfig, build_config
from .gan import Critic, GanModel, Generator
from .training import split_validation, train_gan, train_vae, validation_loss
from .vae import VaeModel, kl_divergence, reparameterize, vae_loss

__all__ = [
    'SuperResolver',
    'PassthroughModel',
    'VaeConfig',
    'GanConfig',
    'TrainingConfig',
    'DEFAULT_LEARNING_RATES',
    'build_config',
    'VaeModel',
    'reparameterize',
    'kl_divergence',
    'vae_loss',
    'GanModel',
    'Generator',
    'Critic',
    'train_vae',
    'train_gan',
    'split_validation',
    'validation_loss',
    'Checkpoint',
    'save_checkpoint',
    'load_checkpoint',
]
