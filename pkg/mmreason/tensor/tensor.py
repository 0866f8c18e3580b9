"""
Dense tensors with reverse-mode automatic differentiation.

Every differentiable operation executed while gradients are enabled records a
`Node` holding its inputs and a backward rule. Nodes carry a global sequence
number, so the recorded graph is in execution order and `backward` can visit
it in exact reverse order.
"""
import itertools
import weakref
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import GradientContractError, ShapeMismatchError

_default_dtype = np.dtype(np.float32)
_grad_enabled = True
_sequence = itertools.count()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def get_default_dtype() -> np.dtype:
    return _default_dtype


@contextmanager
def default_dtype(dtype) -> Iterator[None]:
    """
    Temporarily change the precision of newly created tensors.

    Gradient checks run under `default_dtype(np.float64)`; training uses
    the 32-bit default.
    """
    global _default_dtype
    previous = _default_dtype
    _default_dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _default_dtype = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording, e.g. for inference."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Node:
    """One recorded operation of the computation graph."""

    __slots__ = ("seq", "op", "inputs", "_output", "backward_fn")

    def __init__(
        self,
        op: str,
        inputs: Tuple["Tensor", ...],
        output: "Tensor",
        backward_fn: BackwardFn,
    ):
        self.seq = next(_sequence)
        self.op = op
        self.inputs = inputs
        # weak, so that tensors and nodes do not form reference cycles
        self._output = weakref.ref(output)
        self.backward_fn = backward_fn

    @property
    def output(self) -> Optional["Tensor"]:
        return self._output()

    def __repr__(self) -> str:
        return f"Node({self.seq}, {self.op})"


class Tensor:
    """
    A dense numeric array with an optional gradient.

    Args:
        data: Anything `numpy.array` accepts. The data is always copied.
        requires_grad (bool): Should gradients be computed for this tensor?
        dtype: Precision; defaults to the current default dtype.
    """

    __slots__ = ("data", "requires_grad", "grad", "node", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.array(data, dtype=dtype if dtype is not None else _default_dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[Node] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        """Return a copy of the data."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError(
                f"item() needs one element, got shape {self.shape}"
            )
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # arithmetic; the rules live in `ops`
    def __add__(self, other) -> "Tensor":
        return ops.add(self, other)

    def __radd__(self, other) -> "Tensor":
        return ops.add(other, self)

    def __sub__(self, other) -> "Tensor":
        return ops.sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return ops.sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return ops.mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        return ops.mul(other, self)

    def __truediv__(self, other) -> "Tensor":
        if np.isscalar(other):
            return ops.mul(self, 1.0 / other)
        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        return ops.mul(self, -1.0)

    def __matmul__(self, other) -> "Tensor":
        return ops.matmul(self, other)

    @property
    def T(self) -> "Tensor":
        """Swap the last two axes."""
        return ops.swap_last(self)

    def reshape(self, *shape) -> "Tensor":
        return ops.reshape(self, shape[0] if len(shape) == 1 else shape)

    def transpose(self, *axes) -> "Tensor":
        return ops.transpose(self, axes[0] if len(axes) == 1 else axes)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return ops.mean(self, axis=axis, keepdims=keepdims)


def as_tensor(x, dtype=None) -> Tensor:
    """Wrap constants; tensors are returned unchanged."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def record(
    op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward_fn: BackwardFn
) -> Tensor:
    """
    Create the output tensor of an operation and record it in the graph.

    Nothing is recorded when gradients are disabled or no input requires them.

    Args:
        op (str): Name of the operation.
        inputs (Sequence[Tensor]): Input tensors, in the order `backward_fn`
            returns their gradients.
        out_data (np.ndarray): Result of the forward computation.
        backward_fn (BackwardFn): Maps the output gradient to one gradient
            (or None) per input.

    Returns:
        Tensor: The output.
    """
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    out.node = None
    out.requires_grad = False
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = Node(op, tuple(inputs), out, backward_fn)
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes that broadcasting added or stretched."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def graph_nodes(loss: Tensor) -> List[Node]:
    """All nodes reachable from `loss`, in execution order."""
    seen: Dict[int, Node] = {}
    stack = [loss.node] if loss.node is not None else []
    while stack:
        node = stack.pop()
        if node.seq in seen:
            continue
        seen[node.seq] = node
        for t in node.inputs:
            if t.node is not None and t.node.seq not in seen:
                stack.append(t.node)
    return [seen[seq] for seq in sorted(seen)]


def backward(loss: Tensor) -> None:
    """
    Backpropagate from a scalar loss.

    Gradients are added to the `grad` buffer of every tensor reachable from the
    loss that requires gradients; callers zero them between steps.

    Args:
        loss (Tensor): A tensor with exactly one element.
    """
    if loss.data.size != 1:
        raise GradientContractError(
            f"backward needs a scalar loss, got shape {loss.shape}"
        )
    if not loss.requires_grad:
        raise GradientContractError("loss does not depend on any tensor requiring grad")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    tensors: Dict[int, Tensor] = {id(loss): loss}

    for node in reversed(graph_nodes(loss)):
        out = node.output
        if out is None or id(out) not in grads:
            continue
        input_grads = node.backward_fn(grads[id(out)])
        for t, g in zip(node.inputs, input_grads):
            if g is None or not t.requires_grad:
                continue
            g = unbroadcast(np.asarray(g, dtype=t.data.dtype), t.shape)
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g
                tensors[key] = t

    for key, t in tensors.items():
        g = np.array(grads[key], dtype=t.data.dtype)
        t.grad = g if t.grad is None else t.grad + g


from . import ops  # noqa: E402  (operators of Tensor are defined there)
