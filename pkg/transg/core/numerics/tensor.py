import os
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractViolation

# vjp(grad_out) -> one gradient (or None) per input
BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_tape: ContextVar[Optional["Tape"]] = ContextVar("transg_active_tape", default=None)
_debug: ContextVar[bool] = ContextVar(
    "transg_debug_checks", default=os.getenv("TRANSG_DEBUG", "0") == "1"
)


class Tensor:
    """A float64 array with an optional gradient buffer."""

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._node: Optional["_Node"] = None

    @classmethod
    def wrap(cls, data: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Adopt a float64 array without copying it."""
        out = cls.__new__(cls)
        out.data = data if data.dtype == np.float64 else data.astype(np.float64)
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        out._node = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # operator sugar; the primitive definitions live in ops
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        if np.isscalar(other):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops

        if not np.isscalar(other):
            raise ContractViolation("tensors may only be divided by a Python scalar")
        return ops.scale(self, 1.0 / float(other))

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False):
        from . import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from . import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    @property
    def T(self):
        from . import ops

        return ops.swapaxes(self, -1, -2)


class Parameter(Tensor):
    """A named leaf that always requires a gradient."""

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True, name=name)


class _Node:
    __slots__ = ("output", "inputs", "rule", "op")

    def __init__(self, output: Tensor, inputs: Tuple[Tensor, ...], rule: BackwardRule, op: str):
        self.output = output
        self.inputs = inputs
        self.rule = rule
        self.op = op


class Tape:
    """Ordered record of primitive ops for reverse-mode differentiation.

    Ops only record while a tape is active (``with Tape() as tape``); recording
    order is a topological order, so backward walks it reversed.
    """

    def __init__(self):
        self.nodes: List[_Node] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_tape.reset(self._token)
        self._token = None
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], rule: BackwardRule, op: str):
        node = _Node(output, inputs, rule, op)
        output._node = node
        self.nodes.append(node)

    def leaves(self) -> List[Tensor]:
        seen, found = set(), []
        for node in self.nodes:
            for tensor in node.inputs:
                if tensor.requires_grad and tensor.is_leaf and id(tensor) not in seen:
                    seen.add(id(tensor))
                    found.append(tensor)
        return found

    def backward(self, loss: Tensor):
        """Accumulate d(loss)/d(leaf) into every requires_grad leaf, then reset."""
        if loss.size != 1:
            raise ContractViolation(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._node is not None and (
            not self.nodes or all(node is not loss._node for node in self.nodes[::-1])
        ):
            raise ContractViolation("loss was not recorded on this tape")

        for leaf in self.leaves():
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)

        grads = {id(loss): np.ones_like(loss.data)}
        if loss.is_leaf and loss.requires_grad:
            loss.grad = loss.grad + grads[id(loss)] if loss.grad is not None else grads[id(loss)]

        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = node.rule(upstream)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor.is_leaf:
                    tensor.grad += grad
                elif id(tensor) in grads:
                    grads[id(tensor)] = grads[id(tensor)] + grad
                else:
                    grads[id(tensor)] = grad
        self.reset()

    def reset(self):
        for node in self.nodes:
            node.output._node = None
        self.nodes = []


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


@contextmanager
def no_record():
    """Evaluate ops without recording, even inside an active tape."""
    token = _active_tape.set(None)
    try:
        yield
    finally:
        _active_tape.reset(token)


@contextmanager
def debug_checks(enabled: bool = True):
    """Make every primitive op assert that its output is finite."""
    token = _debug.set(enabled)
    try:
        yield
    finally:
        _debug.reset(token)


def debug_enabled() -> bool:
    return _debug.get()


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def zero_grads(params: Iterable[Tensor]):
    for param in params:
        param.zero_grad()
