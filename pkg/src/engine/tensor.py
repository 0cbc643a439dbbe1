"""Reverse-mode autodiff tensor.

A ``Tensor`` wraps a numpy array and, when gradients are enabled, remembers the
tensors it was computed from together with a closure that pushes the output
gradient back to them. ``backward`` walks that graph in reverse topological
order. There is no batching dimension: feature sequences are ``channels x frames``
arrays and batches are explicit loops in the trainers.
"""

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

_grad_state = threading.local()


def is_grad_enabled() -> bool:
    """Whether new operations record the graph on this thread."""
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording for the enclosed block (inference, finite differences)."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor:
    """Array with an optional gradient and the closure that produced it."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        dtype=None,
        name: Optional[str] = None,
    ):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: Callable[[np.ndarray], None],
    ) -> "Tensor":
        """Build the result of an operation, wiring the graph only when needed."""
        out = cls(data, dtype=data.dtype)
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def channels(self) -> int:
        """Channel count of a ``channels x frames`` feature sequence."""
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        """Frame count of a ``channels x frames`` feature sequence."""
        return self.data.shape[-1]

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def accumulate(self, grad: np.ndarray) -> None:
        """Add ``grad`` into this tensor's gradient."""
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Back-propagate from this tensor through the recorded graph."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = self._topological_order()
        self.accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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

    # Operators delegate to src.engine.ops (imported lazily to avoid a cycle).

    def __add__(self, other):
        from src.engine import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from src.engine import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from src.engine import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from src.engine import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from src.engine import ops

        return ops.div(self, other)

    def __neg__(self):
        from src.engine import ops

        return ops.mul(self, -1.0)

    def __getitem__(self, key):
        from src.engine import ops

        return ops.getitem(self, key)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    """Wrap constants as tensors, matching the dtype of ``like`` when given."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))
