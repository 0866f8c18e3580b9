"""Differentiable operations on `Tensor`."""
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import (
    NumericDomainError,
    ShapeMismatchError,
    UnsupportedOperationError,
    VocabularyIndexError,
)
from .tensor import Tensor, as_tensor, record

logger = logging.getLogger(__name__)

Operand = Union[Tensor, float, int, np.ndarray]


def _pair(a: Operand, b: Operand) -> Tuple[Tensor, Tensor]:
    # constants take the precision of the tensor they meet
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, as_tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return as_tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(
            f"{op}: shapes {a.shape} and {b.shape} do not broadcast"
        )


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("add", a, b)
    return record("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("sub", a, b)
    return record("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("mul", a, b)
    a_data, b_data = a.data, b.data
    return record("mul", (a, b), a_data * b_data, lambda g: (g * b_data, g * a_data))


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("div", a, b)
    a_data, b_data = a.data, b.data
    return record(
        "div",
        (a, b),
        a_data / b_data,
        lambda g: (g / b_data, -g * a_data / (b_data * b_data)),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes, broadcasting leading (batch) axes.

    Args:
        a (Tensor): [..., n, k]
        b (Tensor): [..., k, m]

    Returns:
        Tensor: [..., n, m]
    """
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError(f"matmul: shapes {a.shape} and {b.shape} do not align")
    a_data, b_data = a.data, b.data

    def backward_fn(g):
        return (
            np.matmul(g, np.swapaxes(b_data, -1, -2)),
            np.matmul(np.swapaxes(a_data, -1, -2), g),
        )

    return record("matmul", (a, b), np.matmul(a_data, b_data), backward_fn)


def swap_last(x: Tensor) -> Tensor:
    out = np.swapaxes(x.data, -1, -2)
    return record("swap_last", (x,), out, lambda g: (np.swapaxes(g, -1, -2),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = np.transpose(x.data, axes)
    return record("transpose", (x,), out, lambda g: (np.transpose(g, inverse),))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    original = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError(f"reshape: cannot view {original} as {tuple(shape)}")
    return record("reshape", (x,), out, lambda g: (g.reshape(original),))


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = x.shape

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    out = np.sum(x.data, axis=axis, keepdims=keepdims)
    return record("sum", (x,), out, backward_fn)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.data.size
    else:
        count = np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / float(count))


def _check_nan(op: str, x: Tensor) -> None:
    if np.isnan(x.data).any():
        raise NumericDomainError(f"{op}: input contains NaN")


def softmax_rows(x: Tensor) -> Tensor:
    """
    Softmax over the last axis.

    The row maximum is subtracted first, so large but equal logits do not
    overflow.
    """
    _check_nan("softmax_rows", x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return record("softmax_rows", (x,), y, backward_fn)


def sigmoid(x: Tensor) -> Tensor:
    _check_nan("sigmoid", x)
    z = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(x.dtype)
    return record("sigmoid", (x,), y, lambda g: (g * y * (1.0 - y),))


def relu(x: Tensor) -> Tensor:
    _check_nan("relu", x)
    positive = x.data > 0
    out = np.where(positive, x.data, 0).astype(x.dtype)
    return record("relu", (x,), out, lambda g: (g * positive,))


def elementwise(x: Tensor, kind: str) -> Tensor:
    """Apply a named pointwise nonlinearity: 'sigmoid' or 'relu'."""
    if kind == "sigmoid":
        return sigmoid(x)
    elif kind == "relu":
        return relu(x)
    else:
        raise UnsupportedOperationError(f"Unknown elementwise kind {kind}")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Normalize the last axis to zero mean and unit variance, then scale and shift.

    Args:
        x (Tensor): [..., d]
        gain (Tensor): [d]
        bias (Tensor): [d]
        eps (float): Added to the variance.
    """
    if eps <= 0:
        raise NumericDomainError(f"layer_norm: eps must be positive, got {eps}")
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeMismatchError(
            f"layer_norm: input {x.shape} with gain {gain.shape} and bias {bias.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    gain_data = gain.data

    def backward_fn(g):
        dxhat = g * gain_data
        dx = inv_std * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, g * xhat, g

    out = xhat * gain_data + bias.data
    return record("layer_norm", (x, gain, bias), out, backward_fn)


def log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Numerically stable log-softmax over the last axis of a plain array."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy_loss(
    logits: Tensor, targets: Sequence[int], ignore_index: Optional[int] = -100
) -> Tensor:
    """
    Mean negative log-likelihood of the targets under softmax(logits).

    Args:
        logits (Tensor): [N, V]
        targets (Sequence[int]): N token ids.
        ignore_index (Optional[int]): Targets with this id do not contribute.

    Returns:
        Tensor: A scalar tensor.
    """
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise ShapeMismatchError(
            f"cross_entropy_loss: logits {logits.shape} for {targets.shape[0]} targets"
        )
    _check_nan("cross_entropy_loss", logits)
    n_vocab = logits.shape[1]
    if ignore_index is not None:
        valid = targets != ignore_index
    else:
        valid = np.ones_like(targets, bool)
    bad = valid & ((targets < 0) | (targets >= n_vocab))
    if bad.any():
        raise VocabularyIndexError(
            f"target {int(targets[bad][0])} outside vocabulary of size {n_vocab}"
        )

    count = int(valid.sum())
    rows = np.nonzero(valid)[0]
    logp = log_softmax_rows(logits.data)
    if count == 0:
        logger.warning("cross_entropy_loss: every target is ignored")
        loss = np.zeros((), dtype=logits.dtype)
    else:
        loss = np.asarray(-logp[rows, targets[rows]].sum() / count, dtype=logits.dtype)

    def backward_fn(g):
        grad = np.zeros_like(logp)
        if count > 0:
            grad[rows] = np.exp(logp[rows])
            grad[rows, targets[rows]] -= 1.0
            grad *= g / count
        return (grad,)

    return record("cross_entropy_loss", (logits,), loss, backward_fn)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """
    Look up rows of `weight`.

    Args:
        weight (Tensor): [V, d]
        ids (np.ndarray): Integer array of any shape.

    Returns:
        Tensor: [*ids.shape, d]
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size > 0 and (ids.min() < 0 or ids.max() >= weight.shape[0]):
        raise VocabularyIndexError(
            f"token ids must lie in [0, {weight.shape[0]}), got range "
            f"[{ids.min()}, {ids.max()}]"
        )

    def backward_fn(g):
        grad = np.zeros_like(weight.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, weight.shape[1]))
        return (grad,)

    return record("embedding", (weight,), weight.data[ids], backward_fn)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; the identity when `rate` is 0."""
    if rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return mul(x, Tensor(keep, dtype=x.dtype))
