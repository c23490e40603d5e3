#!/usr/bin/env python3
"""
Volsr Tensor Engine
===================

Dense numpy-backed tensors participating in a reverse-mode differentiation
graph. Every differentiable operation produces a new Tensor that remembers its
parents and a closure mapping the output gradient to one gradient per parent.

Tensors produced by operations are treated as immutable; only Parameters are
mutated, and only by the optimizer.

Version: 1.0.0
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import runtime
from ..errors import ContractViolationError, NumericError, ShapeError

logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
Operand = Union['Tensor', float, int, np.ndarray]


def _as_array(data, dtype=None) -> np.ndarray:
    if dtype is None:
        if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
            dtype = data.dtype
        else:
            dtype = runtime.default_dtype()
    return np.asarray(data, dtype=dtype)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    N-dimensional float tensor with optional gradient tracking.

    Attributes:
        data: numpy array (float32 or float64), row-major
        requires_grad: whether gradients flow into this tensor
        grad: accumulated gradient (leaf tensors only), or None
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        self.data = _as_array(data, dtype)
        if any(extent < 1 for extent in self.data.shape):
            raise ShapeError(f"All tensor extents must be >= 1, got {self.data.shape}")
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype.__name__}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------
    # Basic properties
    # ------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> type:
        return self.data.dtype.type

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> 'Tensor':
        return Tensor(self.data, requires_grad=False)

    # ------------------------------------------------------------------
    # Graph construction
    # ------------------------------------------------------------------

    @staticmethod
    def from_op(data: np.ndarray, parents: Sequence['Tensor'], backward: BackwardFn, op_name: str = 'op') -> 'Tensor':
        """
        Wrap an op result, wiring the backward closure only when a parent needs grad.

        Raises:
            NumericError: if the result contains NaN or Inf
        """
        if not np.all(np.isfinite(data)):
            raise NumericError(f"{op_name} produced non-finite values")
        out = Tensor(data, dtype=data.dtype)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @staticmethod
    def lift(value: Operand, like: 'Tensor') -> 'Tensor':
        if isinstance(value, Tensor):
            return value
        return Tensor(np.asarray(value, dtype=like.data.dtype))

    # ------------------------------------------------------------------
    # Elementwise algebra
    # ------------------------------------------------------------------

    def __add__(self, other: Operand) -> 'Tensor':
        other = Tensor.lift(other, self)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor.from_op(self.data + other.data, (self, other), backward, 'add')

    __radd__ = __add__

    def __neg__(self) -> 'Tensor':
        return Tensor.from_op(-self.data, (self,), lambda g: (-g,), 'neg')

    def __sub__(self, other: Operand) -> 'Tensor':
        return self + (-Tensor.lift(other, self))

    def __rsub__(self, other: Operand) -> 'Tensor':
        return Tensor.lift(other, self) + (-self)

    def __mul__(self, other: Operand) -> 'Tensor':
        other = Tensor.lift(other, self)
        a, b = self.data, other.data

        def backward(g):
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor.from_op(a * b, (self, other), backward, 'mul')

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> 'Tensor':
        if isinstance(other, Tensor):
            raise ContractViolationError("Division by a Tensor is not supported")
        return self * (1.0 / float(other))

    def square(self) -> 'Tensor':
        a = self.data
        return Tensor.from_op(a * a, (self,), lambda g: (2.0 * a * g,), 'square')

    def __pow__(self, exponent: int) -> 'Tensor':
        if exponent != 2:
            raise ContractViolationError("Only squaring is supported")
        return self.square()

    def exp(self) -> 'Tensor':
        out = np.exp(self.data)
        return Tensor.from_op(out, (self,), lambda g: (g * out,), 'exp')

    def clip(self, low: float, high: float) -> 'Tensor':
        a = self.data
        inside = (a >= low) & (a <= high)
        return Tensor.from_op(np.clip(a, low, high), (self,), lambda g: (g * inside,), 'clip')

    # ------------------------------------------------------------------
    # Reductions and reshaping
    # ------------------------------------------------------------------

    def sum(self, axis=None) -> 'Tensor':
        shape = self.shape

        def backward(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).astype(self.data.dtype, copy=True),)

        return Tensor.from_op(np.asarray(self.data.sum(axis=axis)), (self,), backward, 'sum')

    def mean(self, axis=None) -> 'Tensor':
        count = self.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis) * (1.0 / count)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        try:
            out = self.data.reshape(shape)
        except ValueError as e:
            raise ShapeError(f"Cannot reshape {original} to {shape}: {e}")
        return Tensor.from_op(out, (self,), lambda g: (g.reshape(original),), 'reshape')

    def flatten_batch(self) -> 'Tensor':
        """[N, ...] -> [N, prod(...)]"""
        return self.reshape(self.shape[0], -1)

    def backward(self) -> None:
        backward(self)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate tensors along an axis (channels by default)"""
    if not tensors:
        raise ContractViolationError("concat needs at least one tensor")
    arrays = [t.data for t in tensors]
    try:
        out = np.concatenate(arrays, axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat shape mismatch: {[a.shape for a in arrays]}") from e
    sizes = [a.shape[axis] for a in arrays]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(out, tuple(tensors), backward, 'concat')


class Parameter(Tensor):
    """
    Trainable tensor with gradient and Adam optimizer state.

    grad, adam_m and adam_v always have the value's shape; `step` counts
    optimizer updates applied to this parameter.
    """

    def __init__(self, data, name: Optional[str] = None, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype, name=name)
        self.grad = np.zeros_like(self.data)
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step = 0

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape}, step={self.step})"

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def assign(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=self.data.dtype)
        if value.shape != self.shape:
            raise ShapeError(f"Cannot assign {value.shape} to parameter {self.name} of shape {self.shape}")
        self.data = value.copy()


def _topological_order(root: Tensor) -> List[Tensor]:
    """Post-order DFS without recursion; each node appears exactly once"""
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Reverse-mode sweep from a scalar loss.

    Gradients are accumulated additively into every reachable leaf that
    requires grad (Parameters included).

    Raises:
        ContractViolationError: if the loss is not rank 0
    """
    if loss.ndim != 0:
        raise ContractViolationError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        logger.debug("backward() on a tensor that does not require grad; nothing to do")
        return

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = parent_grad if key not in grads else grads[key] + parent_grad


__all__ = ['Tensor', 'Parameter', 'concat', 'backward']
