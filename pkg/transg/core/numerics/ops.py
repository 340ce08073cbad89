"""Differentiable primitives.

Each op computes its forward value with numpy and, when an input requires a
gradient and a tape is active, records a vector-Jacobian rule on that tape.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractViolation, DimensionError
from .tensor import Tensor, active_tape, as_tensor, debug_enabled

Axis = Union[None, int, Tuple[int, ...]]


def _emit(data: np.ndarray, inputs: Tuple[Tensor, ...], rule, op: str) -> Tensor:
    if debug_enabled() and not np.all(np.isfinite(data)):
        raise ContractViolation(f"{op} produced non-finite values")
    requires = any(t.requires_grad for t in inputs)
    out = Tensor.wrap(np.asarray(data, dtype=np.float64), requires_grad=requires)
    tape = active_tape()
    if requires and tape is not None:
        tape.record(out, inputs, rule, op)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _normalize_axis(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(sorted(a % ndim for a in axes))


def _expand_to(grad: np.ndarray, shape: Tuple[int, ...], axes: Tuple[int, ...], keepdims: bool):
    if not keepdims:
        for a in axes:
            grad = np.expand_dims(grad, a)
    return np.broadcast_to(grad, shape)


def _broadcast_shape(op: str, a: Tensor, b: Tensor):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape) from None


# elementwise arithmetic
def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit(a.data + b.data, (a, b), rule, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit(a.data - b.data, (a, b), rule, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def rule(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _emit(a.data * b.data, (a, b), rule, "mul")


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _emit(a.data * c, (a,), lambda g: (g * c,), "scale")


def relu(a) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0
    return _emit(np.where(positive, a.data, 0.0), (a,), lambda g: (g * positive,), "relu")


def exp(a) -> Tensor:
    a = as_tensor(a)
    value = np.exp(a.data)
    return _emit(value, (a,), lambda g: (g * value,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    return _emit(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


# linear algebra and shape
def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError("matmul", a.shape, b.shape) from None

    def rule(g):
        grad_a = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.ndim == 2:
            grad_b = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return grad_a, grad_b

    return _emit(np.matmul(a.data, b.data), (a, b), rule, "matmul")


def linear(x, weight, bias=None) -> Tensor:
    """x @ weight.T + bias with weight stored (out, in)."""
    out = matmul(x, swapaxes(weight, -1, -2))
    return add(out, bias) if bias is not None else out


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        value = a.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape", a.shape, tuple(shape)) from None
    return _emit(value, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _emit(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "transpose")


def swapaxes(a, axis1: int, axis2: int) -> Tensor:
    a = as_tensor(a)
    return _emit(
        np.swapaxes(a.data, axis1, axis2),
        (a,),
        lambda g: (np.swapaxes(g, axis1, axis2),),
        "swapaxes",
    )


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ContractViolation("concat needs at least one tensor")
    try:
        value = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("concat", *(t.shape for t in tensors)) from None
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def rule(g):
        return tuple(np.split(g, splits, axis=axis))

    return _emit(value, tensors, rule, "concat")


# reductions
def sum(a, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    axes = _normalize_axis(axis, a.ndim)

    def rule(g):
        return (_expand_to(g, a.shape, axes, keepdims),)

    return _emit(np.sum(a.data, axis=axes, keepdims=keepdims), (a,), rule, "sum")


def mean(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axis(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    if count == 0:
        raise ContractViolation(f"mean over an empty axis of shape {a.shape}")

    def rule(g):
        return (_expand_to(g, a.shape, axes, keepdims) / count,)

    return _emit(np.mean(a.data, axis=axes, keepdims=keepdims), (a,), rule, "mean")


def masked_mean(a, mask: np.ndarray, axis: int) -> Tensor:
    """Mean over ``axis`` of the entries where ``mask`` is 1.

    Masked entries are multiplied by an exact zero, so their values never reach
    the result.
    """
    a = as_tensor(a)
    mask = np.broadcast_to(np.asarray(mask, dtype=np.float64), a.shape)
    axis = axis % a.ndim
    count = mask.sum(axis=axis, keepdims=True)
    if np.any(count == 0):
        raise ContractViolation("masked_mean: every entry along the axis is masked")
    value = (a.data * mask).sum(axis=axis) / np.squeeze(count, axis=axis)

    def rule(g):
        return (np.expand_dims(g, axis) * mask / count,)

    return _emit(value, (a,), rule, "masked_mean")


def abs_sum(a, axis: Axis = None) -> Tensor:
    """Sum of absolute values (the l1 norm when reduced over everything)."""
    a = as_tensor(a)
    axes = _normalize_axis(axis, a.ndim)
    sign = np.sign(a.data)

    def rule(g):
        return (_expand_to(g, a.shape, axes, False) * sign,)

    return _emit(np.sum(np.abs(a.data), axis=axes), (a,), rule, "abs_sum")


# normalizations
def _check_rows(op: str, a: Tensor):
    if a.ndim == 0 or a.shape[-1] == 0:
        raise ContractViolation(f"{op} over an empty axis (shape {a.shape})")
    if not np.all(np.isfinite(a.data)):
        raise ContractViolation(f"{op} input rows must be finite")


def softmax(a) -> Tensor:
    """Softmax along the last axis."""
    a = as_tensor(a)
    _check_rows("softmax", a)
    shifted = np.exp(a.data - a.data.max(axis=-1, keepdims=True))
    value = shifted / shifted.sum(axis=-1, keepdims=True)

    def rule(g):
        return (value * (g - (g * value).sum(axis=-1, keepdims=True)),)

    return _emit(value, (a,), rule, "softmax")


def log_softmax(a) -> Tensor:
    a = as_tensor(a)
    _check_rows("log_softmax", a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    value = shifted - lse
    probs = np.exp(value)

    def rule(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return _emit(value, (a,), rule, "log_softmax")


def l2_normalize(a, axis: int = -1, eps: float = 1e-12) -> Tensor:
    a = as_tensor(a)
    norm = np.maximum(np.sqrt((a.data**2).sum(axis=axis, keepdims=True)), eps)
    value = a.data / norm

    def rule(g):
        return ((g - value * (g * value).sum(axis=axis, keepdims=True)) / norm,)

    return _emit(value, (a,), rule, "l2_normalize")


@dataclass
class RunningStats:
    """Batch-norm running mean/variance for one channel set."""

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def initial(cls, channels: int) -> "RunningStats":
        return cls(mean=np.zeros(channels), var=np.ones(channels))


def batch_norm(
    x,
    weight,
    bias,
    stats: RunningStats,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Normalize every channel (last axis) over all leading axes.

    Training mode uses batch statistics and updates ``stats`` in place;
    inference mode uses ``stats``.
    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    channels = x.shape[-1]
    if weight.shape != (channels,) or bias.shape != (channels,):
        raise DimensionError("batch_norm", x.shape, weight.shape, bias.shape)
    flat = x.data.reshape(-1, channels)
    n = flat.shape[0]
    if n == 0:
        raise ContractViolation("batch_norm over an empty batch")

    if training:
        mu = flat.mean(axis=0)
        var = flat.var(axis=0)
        unbiased = var * n / (n - 1) if n > 1 else var
        stats.mean = (1.0 - momentum) * stats.mean + momentum * mu
        stats.var = (1.0 - momentum) * stats.var + momentum * unbiased
    else:
        mu, var = stats.mean, stats.var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (flat - mu) * inv_std
    value = (xhat * weight.data + bias.data).reshape(x.shape)

    def rule(g):
        g2 = g.reshape(-1, channels)
        grad_weight = (g2 * xhat).sum(axis=0)
        grad_bias = g2.sum(axis=0)
        dxhat = g2 * weight.data
        if training:
            dx = (inv_std / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        else:
            dx = dxhat * inv_std
        return dx.reshape(x.shape), grad_weight, grad_bias

    return _emit(value, (x, weight, bias), rule, "batch_norm")
