"""
Volsr tensor core: tensors, differentiable ops, layers, Adam, gradient checks.
"""

from . import runtime
from .gradcheck import grad_check
from .layers import Block, BatchNorm, Conv3D, Conv3DTranspose, Dense, Layer
from .ops import BatchNormState, activation, batchnorm, conv3d, conv3d_transpose, dense, mse
from .optim import adam_step, clip_grad_norm, clip_weights, zero_grad
from .tensor import Parameter, Tensor, backward, concat

__all__ = [
    'runtime',
    'Tensor',
    'Parameter',
    'backward',
    'concat',
    'conv3d',
    'conv3d_transpose',
    'dense',
    'batchnorm',
    'BatchNormState',
    'activation',
    'mse',
    'Layer',
    'Conv3D',
    'Conv3DTranspose',
    'Dense',
    'BatchNorm',
    'Block',
    'adam_step',
    'zero_grad',
    'clip_weights',
    'clip_grad_norm',
    'grad_check',
]
