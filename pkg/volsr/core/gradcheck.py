"""
Central-difference gradient checker.

The fragment under test is reduced to a scalar with a fixed random
projection, loss = sum(fragment(x) * R), so every output element
contributes to the checked gradient.
"""

import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .tensor import Parameter, Tensor, backward
from ..errors import ContractViolationError

logger = logging.getLogger(__name__)


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-8)
    return float(np.max(np.abs(analytic - numeric))) / scale


def grad_check(fragment: Callable[[Tensor], Tensor], x: np.ndarray,
               params: Optional[Sequence[Parameter]] = None, check_input: bool = True,
               seed: int = 0, max_entries: Optional[int] = None) -> float:
    """
    Compare analytic gradients against central differences.

    Args:
        fragment: function mapping an input Tensor to an output Tensor
        x: float64 input array
        params: Parameters to check (the fragment must close over them)
        check_input: also check the gradient with respect to x
        seed: seed of the projection R and of entry sub-sampling
        max_entries: if set, check at most this many entries per tensor

    Returns:
        float: max over checked tensors of
            max|analytic - numeric| / max(max|analytic|, max|numeric|, 1e-8)
    """
    x = np.asarray(x)
    if x.dtype != np.float64:
        raise ContractViolationError("grad_check requires 64-bit inputs")
    params = list(params or [])
    for p in params:
        if p.data.dtype != np.float64:
            raise ContractViolationError(f"grad_check requires 64-bit parameters ({p.name})")

    rng = np.random.default_rng(seed)
    x_tensor = Tensor(x.copy(), requires_grad=check_input)
    out = fragment(x_tensor)
    projection = rng.standard_normal(out.shape)

    for p in params:
        p.zero_grad()
    backward((out * projection).sum())

    def loss_at() -> float:
        return float(np.sum(fragment(Tensor(x_tensor.data)).data * projection))

    targets: Dict[str, tuple] = {}
    if check_input:
        targets['input'] = (x_tensor, x_tensor.grad.copy())
    for i, p in enumerate(params):
        targets[f'{i}:{p.name}'] = (p, p.grad.copy())

    worst = 0.0
    for label, (tensor, analytic) in targets.items():
        tensor.data = np.ascontiguousarray(tensor.data)
        flat = tensor.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.empty(indices.size)
        for n, idx in enumerate(indices):
            original = flat[idx]
            h = 1e-5 * max(1.0, abs(original))
            flat[idx] = original + h
            plus = loss_at()
            flat[idx] = original - h
            minus = loss_at()
            flat[idx] = original
            numeric[n] = (plus - minus) / (2.0 * h)
        err = _relative_error(analytic.reshape(-1)[indices], numeric)
        logger.debug("grad_check %s: relative error %.3e over %d entries", label, err, indices.size)
        worst = max(worst, err)

    for p in params:
        p.zero_grad()
    return worst


__all__ = ['grad_check']
