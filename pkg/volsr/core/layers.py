#!/usr/bin/env python3
"""
Volsr Layer Interface
=====================

Base class for trainable building blocks plus the concrete layers used by
the super-resolution networks. A layer owns its Parameters (and batch-norm
state) and exposes them by stable hierarchical names so checkpoints can be
written and restored without pickling.

Version: 1.0.0
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import runtime
from .ops import BatchNormState, activation, batchnorm, conv3d, conv3d_transpose, dense
from .tensor import Parameter, Tensor
from ..errors import ContractViolationError

logger = logging.getLogger(__name__)


def he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype=None) -> np.ndarray:
    """Uniform He initialization: U(-sqrt(6/fan_in), +sqrt(6/fan_in))"""
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(runtime.resolve_dtype(dtype or runtime.default_dtype()))


class Layer(ABC):
    """Base class for all volsr layers"""

    def __init__(self, name: str):
        self.name = name
        self.mode = 'train'

    @abstractmethod
    def forward(self, x: Tensor) -> Tensor:
        """
        Apply the layer

        Args:
            x: input activations

        Returns:
            Tensor: output activations
        """
        pass

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def children(self) -> List['Layer']:
        """Sub-layers (composite layers override)"""
        return []

    def own_parameters(self) -> List[Tuple[str, Parameter]]:
        return []

    def own_batchnorm(self) -> List[Tuple[str, BatchNormState]]:
        return []

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for local, param in self.own_parameters():
            yield f"{self.name}.{local}", param
        for child in self.children():
            for full, param in child.named_parameters():
                yield f"{self.name}.{full}", param

    def named_batchnorm(self) -> Iterator[Tuple[str, BatchNormState]]:
        for local, state in self.own_batchnorm():
            yield f"{self.name}.{local}", state
        for child in self.children():
            for full, state in child.named_batchnorm():
                yield f"{self.name}.{full}", state

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def set_mode(self, mode: str) -> None:
        """Switch between 'train' and 'infer' (affects batch normalization)"""
        if mode not in ('train', 'infer'):
            raise ContractViolationError(f"mode must be 'train' or 'infer', got {mode!r}")
        self.mode = mode
        for _, state in self.own_batchnorm():
            state.mode = mode
        for child in self.children():
            child.set_mode(mode)

    def get_status(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'mode': self.mode,
            'parameters': sum(p.size for p in self.parameters()),
        }


class Conv3D(Layer):
    """k^3 convolution, "same" padding"""

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel_size: int = 3,
                 stride: int = 1, rng: Optional[np.random.Generator] = None, dtype=None):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        fan_in = kernel_size ** 3 * in_channels
        shape = (kernel_size,) * 3 + (in_channels, out_channels)
        self.stride = stride
        self.kernel = Parameter(he_uniform(rng, shape, fan_in, dtype), name='kernel')
        self.bias = Parameter(np.zeros(out_channels), name='bias', dtype=self.kernel.data.dtype)

    def own_parameters(self):
        return [('kernel', self.kernel), ('bias', self.bias)]

    def forward(self, x: Tensor) -> Tensor:
        return conv3d(x, self.kernel, self.bias, self.stride)


class Conv3DTranspose(Layer):
    """Transposed k^3 convolution, exact stride x upscale"""

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel_size: int = 3,
                 stride: int = 1, rng: Optional[np.random.Generator] = None, dtype=None):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        fan_in = kernel_size ** 3 * in_channels
        shape = (kernel_size,) * 3 + (out_channels, in_channels)
        self.stride = stride
        self.kernel = Parameter(he_uniform(rng, shape, fan_in, dtype), name='kernel')
        self.bias = Parameter(np.zeros(out_channels), name='bias', dtype=self.kernel.data.dtype)

    def own_parameters(self):
        return [('kernel', self.kernel), ('bias', self.bias)]

    def forward(self, x: Tensor) -> Tensor:
        return conv3d_transpose(x, self.kernel, self.bias, self.stride)


class Dense(Layer):
    """Fully connected layer on [N, F] inputs"""

    def __init__(self, name: str, in_features: int, out_features: int,
                 rng: Optional[np.random.Generator] = None, dtype=None):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(he_uniform(rng, (in_features, out_features), in_features, dtype), name='weight')
        self.bias = Parameter(np.zeros(out_features), name='bias', dtype=self.weight.data.dtype)

    def own_parameters(self):
        return [('weight', self.weight), ('bias', self.bias)]

    def forward(self, x: Tensor) -> Tensor:
        return dense(x, self.weight, self.bias)


class BatchNorm(Layer):
    """Per-channel batch normalization"""

    def __init__(self, name: str, channels: int, momentum: float = 0.9, epsilon: float = 1e-5, dtype=None):
        super().__init__(name)
        dt = runtime.resolve_dtype(dtype or runtime.default_dtype())
        self.state = BatchNormState.create(channels, momentum=momentum, epsilon=epsilon, dtype=dt)

    def own_parameters(self):
        return [('gamma', self.state.gamma), ('beta', self.state.beta)]

    def own_batchnorm(self):
        return [('state', self.state)]

    def forward(self, x: Tensor) -> Tensor:
        return batchnorm(x, self.state)


class Block(Layer):
    """
    Main layer followed by optional batch normalization and an activation.

    This is the "Conv3D / Dense + BN + ReLU" unit the encoder, decoder,
    generator and critic are assembled from.
    """

    def __init__(self, name: str, main: Layer, out_channels: int, use_bn: bool = True,
                 act: str = 'relu', alpha: float = 0.2, momentum: float = 0.9,
                 epsilon: float = 1e-5, dtype=None):
        super().__init__(name)
        main.name = 'main'
        self.main = main
        self.bn = BatchNorm('bn', out_channels, momentum, epsilon, dtype) if use_bn else None
        self.act = act
        self.alpha = alpha

    def children(self):
        return [self.main] if self.bn is None else [self.main, self.bn]

    def forward(self, x: Tensor) -> Tensor:
        y = self.main(x)
        if self.bn is not None:
            y = self.bn(y)
        return activation(y, self.act, self.alpha)


__all__ = [
    'he_uniform',
    'Layer',
    'Conv3D',
    'Conv3DTranspose',
    'Dense',
    'BatchNorm',
    'Block',
]
