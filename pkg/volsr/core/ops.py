#!/usr/bin/env python3
"""
Volsr Differentiable Operations
===============================

The layer vocabulary of the super-resolution networks, each with an analytic
backward pass:

- conv3d / conv3d_transpose (NDHWC activations, "same" padding)
- dense
- batchnorm (train / infer modes)
- activation (relu, leaky_relu, tanh, sigmoid, linear)
- mse

Convolutions are evaluated tap by tap: for every (i, j, l) offset of the
k x k x k kernel the strided input window is multiplied against the
Cin x Cout tap matrix. conv3d_transpose is the exact adjoint of conv3d with
the same kernel, so <conv3d(x), y> == <x, conv3d_transpose(y)>.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from .tensor import Parameter, Tensor
from ..errors import ContractViolationError, NumericError, ShapeError

logger = logging.getLogger(__name__)

ACTIVATIONS = ('relu', 'leaky_relu', 'tanh', 'sigmoid', 'linear')


def same_padding(size: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    """
    Zero padding for "same" convolution along one axis.

    Returns:
        (pad_before, pad_after, output_size) with output_size = ceil(size / stride)
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before, out


def _window(stride: int, start: int, count: int) -> slice:
    return slice(start, start + stride * (count - 1) + 1, stride)


def _taps(k: int):
    for i in range(k):
        for j in range(k):
            for l in range(k):
                yield i, j, l


def _conv_forward(xp: np.ndarray, kernel: np.ndarray, stride: int, out_spatial: Tuple[int, int, int]) -> np.ndarray:
    n, cin = xp.shape[0], xp.shape[-1]
    cout = kernel.shape[-1]
    do, ho, wo = out_spatial
    dtype = np.result_type(xp.dtype, kernel.dtype)
    out = np.zeros((n * do * ho * wo, cout), dtype=dtype)
    for i, j, l in _taps(kernel.shape[0]):
        win = xp[:, _window(stride, i, do), _window(stride, j, ho), _window(stride, l, wo), :]
        out += win.reshape(-1, cin) @ kernel[i, j, l]
    return out.reshape(n, do, ho, wo, cout)


def _conv_adjoint(g: np.ndarray, kernel: np.ndarray, stride: int, padded_shape: Tuple[int, ...]) -> np.ndarray:
    n, do, ho, wo, cout = g.shape
    cin = kernel.shape[3]
    dtype = np.result_type(g.dtype, kernel.dtype)
    gxp = np.zeros(padded_shape, dtype=dtype)
    gflat = g.reshape(-1, cout)
    for i, j, l in _taps(kernel.shape[0]):
        contrib = (gflat @ kernel[i, j, l].T).reshape(n, do, ho, wo, cin)
        gxp[:, _window(stride, i, do), _window(stride, j, ho), _window(stride, l, wo), :] += contrib
    return gxp


def _conv_kernel_grad(xp: np.ndarray, g: np.ndarray, stride: int, k: int) -> np.ndarray:
    n, do, ho, wo, cout = g.shape
    cin = xp.shape[-1]
    dtype = np.result_type(xp.dtype, g.dtype)
    dk = np.empty((k, k, k, cin, cout), dtype=dtype)
    gflat = g.reshape(-1, cout)
    for i, j, l in _taps(k):
        win = xp[:, _window(stride, i, do), _window(stride, j, ho), _window(stride, l, wo), :]
        dk[i, j, l] = win.reshape(-1, cin).T @ gflat
    return dk


def _check_kernel(kernel: Tensor) -> int:
    if kernel.ndim != 5:
        raise ShapeError(f"kernel must be [k,k,k,Cin,Cout], got {kernel.shape}")
    k = kernel.shape[0]
    if kernel.shape[1] != k or kernel.shape[2] != k:
        raise ShapeError(f"kernel must be cubic, got {kernel.shape[:3]}")
    if k % 2 == 0:
        raise ContractViolationError(f"kernel size must be odd, got {k}")
    return k


def _check_stride(stride: int) -> None:
    if int(stride) != stride or stride < 1:
        raise ContractViolationError(f"stride must be a positive integer, got {stride}")


def _check_finite(x: Tensor, op_name: str) -> None:
    if not np.all(np.isfinite(x.data)):
        raise NumericError(f"{op_name} received non-finite input")


def _padding_spec(spatial: Tuple[int, int, int], k: int, stride: int):
    pads, out = [], []
    for size in spatial:
        before, after, o = same_padding(size, k, stride)
        pads.append((before, after))
        out.append(o)
    return pads, tuple(out)


def _pad(x: np.ndarray, pads) -> np.ndarray:
    return np.pad(x, [(0, 0)] + list(pads) + [(0, 0)])


def _crop(xp: np.ndarray, pads, spatial) -> np.ndarray:
    (d0, _), (h0, _), (w0, _) = pads
    d, h, w = spatial
    return xp[:, d0:d0 + d, h0:h0 + h, w0:w0 + w, :]


def conv3d(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None, stride: int = 1) -> Tensor:
    """
    3D convolution with "same" zero padding.

    Args:
        x: [N, D, H, W, Cin]
        kernel: [k, k, k, Cin, Cout], k odd
        bias: [Cout] or None
        stride: positive integer applied on all three spatial axes

    Returns:
        [N, ceil(D/s), ceil(H/s), ceil(W/s), Cout]
    """
    if x.ndim != 5:
        raise ShapeError(f"conv3d expects [N,D,H,W,C], got {x.shape}")
    k = _check_kernel(kernel)
    _check_stride(stride)
    if kernel.shape[3] != x.shape[-1]:
        raise ShapeError(f"conv3d channel mismatch: input has {x.shape[-1]}, kernel expects {kernel.shape[3]}")
    cout = kernel.shape[4]
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},), got {bias.shape}")
    _check_finite(x, 'conv3d')

    spatial = x.shape[1:4]
    pads, out_spatial = _padding_spec(spatial, k, stride)
    xp = _pad(x.data, pads)
    out = _conv_forward(xp, kernel.data, stride, out_spatial)
    if bias is not None:
        out = out + bias.data

    w = kernel.data

    def backward(g):
        gx = _crop(_conv_adjoint(g, w, stride, xp.shape), pads, spatial)
        gk = _conv_kernel_grad(xp, g, stride, k)
        grads = [gx, gk]
        if bias is not None:
            grads.append(g.sum(axis=(0, 1, 2, 3)))
        return grads

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return Tensor.from_op(out, parents, backward, 'conv3d')


def conv3d_transpose(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None, stride: int = 1) -> Tensor:
    """
    Transposed 3D convolution producing exactly stride x the input extent.

    Args:
        x: [N, D, H, W, Cin]
        kernel: [k, k, k, Cout, Cin] (the kernel of the conv3d it is the adjoint of)
        bias: [Cout] or None
        stride: positive integer

    Returns:
        [N, D*s, H*s, W*s, Cout]
    """
    if x.ndim != 5:
        raise ShapeError(f"conv3d_transpose expects [N,D,H,W,C], got {x.shape}")
    k = _check_kernel(kernel)
    _check_stride(stride)
    if kernel.shape[4] != x.shape[-1]:
        raise ShapeError(
            f"conv3d_transpose channel mismatch: input has {x.shape[-1]}, kernel expects {kernel.shape[4]}"
        )
    cout = kernel.shape[3]
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},), got {bias.shape}")
    _check_finite(x, 'conv3d_transpose')

    in_spatial = x.shape[1:4]
    out_spatial = tuple(extent * stride for extent in in_spatial)
    pads, conv_out = _padding_spec(out_spatial, k, stride)
    assert conv_out == in_spatial
    padded_shape = (x.shape[0],) + tuple(o + b + a for o, (b, a) in zip(out_spatial, pads)) + (cout,)

    y = x.data
    w = kernel.data
    out = _crop(_conv_adjoint(y, w, stride, padded_shape), pads, out_spatial)
    if bias is not None:
        out = out + bias.data

    def backward(g):
        gp = _pad(g, pads)
        gy = _conv_forward(gp, w, stride, in_spatial)
        gk = _conv_kernel_grad(gp, y, stride, k)
        grads = [gy, gk]
        if bias is not None:
            grads.append(g.sum(axis=(0, 1, 2, 3)))
        return grads

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return Tensor.from_op(np.ascontiguousarray(out), parents, backward, 'conv3d_transpose')


def dense(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map [N, F] @ [F, G] + [G]"""
    if x.ndim != 2 or weight.ndim != 2:
        raise ShapeError(f"dense expects [N,F] and [F,G], got {x.shape} and {weight.shape}")
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f"dense feature mismatch: {x.shape[1]} vs {weight.shape[0]}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"bias must have shape ({weight.shape[1]},), got {bias.shape}")

    a, w = x.data, weight.data
    out = a @ w
    if bias is not None:
        out = out + bias.data

    def backward(g):
        grads = [g @ w.T, a.T @ g]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, 'dense')


@dataclass
class BatchNormState:
    """
    Per-channel batch normalization state.

    In 'train' mode batch statistics normalize the input and the running
    statistics are updated as running = momentum * running + (1 - momentum) * batch.
    In 'infer' mode only the running statistics are used.
    """

    gamma: Parameter
    beta: Parameter
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9
    epsilon: float = 1e-5
    mode: str = 'train'

    @classmethod
    def create(cls, channels: int, momentum: float = 0.9, epsilon: float = 1e-5,
               dtype=np.float32, name: str = 'bn') -> 'BatchNormState':
        if not 0.0 < momentum < 1.0:
            raise ContractViolationError(f"momentum must be in (0, 1), got {momentum}")
        if epsilon <= 0:
            raise ContractViolationError(f"epsilon must be positive, got {epsilon}")
        return cls(
            gamma=Parameter(np.ones(channels, dtype=dtype), name=f"{name}.gamma"),
            beta=Parameter(np.zeros(channels, dtype=dtype), name=f"{name}.beta"),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
            momentum=momentum,
            epsilon=epsilon,
        )

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


def batchnorm(x: Tensor, state: BatchNormState) -> Tensor:
    """
    Batch normalization over every axis except the last (channels).

    A channel that is constant across the batch normalizes to exactly 0, so the
    output there equals beta; epsilon keeps the division finite.
    """
    if x.shape[-1] != state.channels:
        raise ShapeError(f"batchnorm channel mismatch: input {x.shape[-1]}, state {state.channels}")
    if state.mode not in ('train', 'infer'):
        raise ContractViolationError(f"batchnorm mode must be 'train' or 'infer', got {state.mode!r}")

    axes = tuple(range(x.ndim - 1))
    a = x.data
    gamma, beta = state.gamma.data, state.beta.data

    if state.mode == 'train':
        mean = a.mean(axis=axes)
        var = a.var(axis=axes)
        centered = a - mean
        constant = np.ptp(a, axis=axes) == 0
        if constant.any():
            centered[..., constant] = 0.0
            var = np.where(constant, 0.0, var).astype(a.dtype)
        inv_std = 1.0 / np.sqrt(var + state.epsilon)
        xhat = centered * inv_std
        out = gamma * xhat + beta

        m = state.momentum
        state.running_mean = (m * state.running_mean + (1.0 - m) * mean).astype(state.running_mean.dtype)
        state.running_var = (m * state.running_var + (1.0 - m) * var).astype(state.running_var.dtype)

        def backward(g):
            g_gamma = (g * xhat).sum(axis=axes)
            g_beta = g.sum(axis=axes)
            g_xhat = g * gamma
            gx = inv_std * (g_xhat - g_xhat.mean(axis=axes) - xhat * (g_xhat * xhat).mean(axis=axes))
            return gx, g_gamma, g_beta
    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.epsilon)
        xhat = (a - state.running_mean) * inv_std
        out = gamma * xhat + beta

        def backward(g):
            return g * gamma * inv_std, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return Tensor.from_op(out.astype(a.dtype, copy=False), (x, state.gamma, state.beta), backward, 'batchnorm')


def activation(x: Tensor, kind: str = 'relu', alpha: float = 0.2) -> Tensor:
    """
    Elementwise activation.

    Args:
        kind: relu | leaky_relu | tanh | sigmoid | linear
        alpha: negative slope for leaky_relu
    """
    a = x.data
    if kind == 'linear':
        return x
    if kind == 'relu':
        mask = a > 0
        return Tensor.from_op(a * mask, (x,), lambda g: (g * mask,), 'relu')
    if kind == 'leaky_relu':
        slope = np.where(a > 0, 1.0, alpha).astype(a.dtype)
        return Tensor.from_op(a * slope, (x,), lambda g: (g * slope,), 'leaky_relu')
    if kind == 'tanh':
        out = np.tanh(a)
        return Tensor.from_op(out, (x,), lambda g: (g * (1.0 - out * out),), 'tanh')
    if kind == 'sigmoid':
        out = expit(a)
        return Tensor.from_op(out, (x,), lambda g: (g * out * (1.0 - out),), 'sigmoid')
    raise ContractViolationError(f"Unknown activation '{kind}' (expected one of {ACTIVATIONS})")


def mse(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over every element"""
    if pred.shape != target.shape:
        raise ShapeError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    return (pred - target).square().mean()


__all__ = [
    'ACTIVATIONS',
    'same_padding',
    'conv3d',
    'conv3d_transpose',
    'dense',
    'BatchNormState',
    'batchnorm',
    'activation',
    'mse',
]
