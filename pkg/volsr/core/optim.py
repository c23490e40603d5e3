"""
Adam optimizer and the critic clipping helpers.
"""

import logging
from typing import Iterable, Sequence

import numpy as np

from .tensor import Parameter
from ..errors import ContractViolationError, NumericError

logger = logging.getLogger(__name__)


def zero_grad(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def adam_step(params: Sequence[Parameter], lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """
    One Adam update with bias correction; gradients are zeroed afterwards.

    Args:
        params: parameters with populated .grad
        lr: learning rate (> 0)
    """
    if lr <= 0:
        raise ContractViolationError(f"learning rate must be positive, got {lr}")
    for p in params:
        g = p.grad
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {p.name}")
        p.step += 1
        p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * g
        p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * (g * g)
        m_hat = p.adam_m / (1.0 - beta1 ** p.step)
        v_hat = p.adam_v / (1.0 - beta2 ** p.step)
        p.data = (p.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype, copy=False)
        p.adam_m = p.adam_m.astype(p.data.dtype, copy=False)
        p.adam_v = p.adam_v.astype(p.data.dtype, copy=False)
        p.zero_grad()


def clip_weights(params: Iterable[Parameter], clip_value: float) -> None:
    """Clamp every parameter value into [-clip_value, clip_value]"""
    for p in params:
        np.clip(p.data, -clip_value, clip_value, out=p.data)


def clip_grad_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """
    Rescale gradients so their joint L2 norm is at most max_norm.

    Returns:
        float: the norm before rescaling
    """
    total = float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))
    if total > max_norm > 0:
        scale = max_norm / total
        for p in params:
            p.grad = p.grad * scale
    return total


__all__ = ['zero_grad', 'adam_step', 'clip_weights', 'clip_grad_norm']
