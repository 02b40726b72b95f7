"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every network equation is composed from the primitives in this module, so
gradients come from the tape rather than per-layer derivations. A Tape is
rebuilt for each forward pass and belongs to a single thread.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Vjp = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class ShapeError(ValueError):
    """Operands of a primitive do not conform."""

    def __init__(self, primitive: str, *shapes: tuple[int, ...]):
        self.primitive = primitive
        self.shapes = shapes
        joined = " and ".join(str(s) for s in shapes)
        super().__init__(f"{primitive}: incompatible shapes {joined}")


class TapeError(RuntimeError):
    """Misuse of the differentiation tape."""


class Tensor:
    """Immutable dense array, optionally recorded on a Tape."""

    __slots__ = ("data", "node_id", "tape")

    def __init__(self, data, node_id: int | None = None, tape: Tape | None = None):
        array = np.array(data, dtype=np.float64)
        array.flags.writeable = False
        self.data = array
        self.node_id = node_id
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def taped(self) -> bool:
        return self.tape is not None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        suffix = f", node_id={self.node_id}" if self.taped else ""
        return f"Tensor(shape={self.shape}{suffix})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self) -> Tensor:
        return transpose(self)


@dataclass
class _Node:
    parents: tuple[int | None, ...]
    vjp: Vjp | None
    shape: tuple[int, ...]
    name: str | None = None


class Tape:
    """Ordered record of primitive applications (parents always precede children)."""

    def __init__(self):
        self._nodes: list[_Node] = []
        self._leaves: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def leaf(self, value, name: str | None = None) -> Tensor:
        """Register a differentiable input."""
        tensor = Tensor(value)
        node_id = len(self._nodes)
        self._nodes.append(_Node(parents=(), vjp=None, shape=tensor.shape, name=name))
        if name is not None:
            if name in self._leaves:
                raise TapeError(f"Leaf '{name}' already registered")
            self._leaves[name] = node_id
        tensor.node_id = node_id
        tensor.tape = self
        return tensor

    def record(self, value: np.ndarray, inputs: Sequence[Tensor], vjp: Vjp) -> Tensor:
        parents = tuple(t.node_id if t.tape is self else None for t in inputs)
        node_id = len(self._nodes)
        self._nodes.append(_Node(parents=parents, vjp=vjp, shape=value.shape))
        return Tensor(value, node_id=node_id, tape=self)

    def backward(self, loss: Tensor) -> dict[int, Tensor]:
        """Gradients of a scalar loss for every leaf on this tape."""
        if loss.tape is not self or loss.node_id is None:
            raise TapeError("backward() needs a tensor recorded on this tape")
        if loss.data.size != 1:
            raise ShapeError("backward", loss.shape, ())

        grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
        for node_id in range(loss.node_id, -1, -1):
            grad = grads.get(node_id)
            node = self._nodes[node_id]
            if grad is None or node.vjp is None:
                continue
            for parent, parent_grad in zip(node.parents, node.vjp(grad)):
                if parent is None or parent_grad is None:
                    continue
                if parent in grads:
                    grads[parent] = grads[parent] + parent_grad
                else:
                    grads[parent] = parent_grad

        result = {}
        for node_id, node in enumerate(self._nodes):
            if node.vjp is None:
                result[node_id] = Tensor(grads.get(node_id, np.zeros(node.shape)))
        return result

    def named_gradients(self, grads: dict[int, Tensor]) -> dict[str, np.ndarray]:
        return {name: grads[node_id].data for name, node_id in self._leaves.items()}


def backward(loss: Tensor) -> dict[int, Tensor]:
    if loss.tape is None:
        raise TapeError("backward() called on an untaped tensor")
    return loss.tape.backward(loss)


@dataclass(frozen=True)
class RngState:
    """Seeded generator; identical seeds give identical sample streams."""

    seed: int
    algorithm: str = "PCG64"

    def generator(self, *stream: int) -> np.random.Generator:
        if self.algorithm != "PCG64":
            raise ValueError(f"Unsupported generator '{self.algorithm}'")
        sequence = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *stream])
        return np.random.Generator(np.random.PCG64(sequence))

    def derive(self, *stream: int) -> RngState:
        """Independent child state for a sub-stream (epoch, document, ...)."""
        child = int(np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *stream]).generate_state(1, np.uint64)[0])
        return RngState(seed=child, algorithm=self.algorithm)


# ##################################################################
# primitive plumbing
# wraps constants, decides whether the result is taped


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(value: np.ndarray, inputs: Sequence[Tensor], vjp: Vjp) -> Tensor:
    tapes = {id(t.tape): t.tape for t in inputs if t.tape is not None}
    if not tapes:
        return Tensor(value)
    if len(tapes) > 1:
        raise TapeError("Operands are recorded on different tapes")
    (tape,) = tapes.values()
    return tape.record(value, inputs, vjp)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(primitive: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(primitive, a.shape, b.shape) from None


# ##################################################################
# elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)
    return _emit(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def subtract(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("subtract", a, b)
    return _emit(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def multiply(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("multiply", a, b)
    return _emit(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def matmul(a, b) -> Tensor:
    """Matrix product; 1-D operands act as row (left) or column (right) vectors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    value = a.data @ b.data

    def vjp(g):
        a2 = a.data if a.data.ndim == 2 else a.data[None, :]
        b2 = b.data if b.data.ndim == 2 else b.data[:, None]
        g2 = np.reshape(g, (a2.shape[0], b2.shape[1]))
        return (g2 @ b2.T).reshape(a.shape), (a2.T @ g2).reshape(b.shape)

    return _emit(np.asarray(value, dtype=np.float64), (a, b), vjp)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    # split by sign so exp never overflows
    positive = x.data >= 0
    z = np.exp(-np.abs(x.data))
    value = np.where(positive, 1.0 / (1.0 + z), z / (1.0 + z))
    return _emit(value, (x,), lambda g: (g * value * (1.0 - value),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    value = np.tanh(x.data)
    return _emit(value, (x,), lambda g: (g * (1.0 - value * value),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    value = np.exp(x.data)
    return _emit(value, (x,), lambda g: (g * value,))


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise ValueError("log: non-positive input")
    return _emit(np.log(x.data), (x,), lambda g: (g / x.data,))


def clamp(x, low: float, high: float) -> Tensor:
    """Clip into [low, high]; gradient passes only where the input was inside."""
    x = as_tensor(x)
    inside = (x.data >= low) & (x.data <= high)
    return _emit(np.clip(x.data, low, high), (x,), lambda g: (g * inside,))


# ##################################################################
# reductions and normalisation


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    if axis is not None and not -x.data.ndim <= axis < x.data.ndim:
        raise ShapeError("mean", x.shape)
    value = np.mean(x.data, axis=axis)
    count = x.data.size if axis is None else x.shape[axis]

    def vjp(g):
        expanded = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(expanded, x.shape) / count,)

    return _emit(np.asarray(value, dtype=np.float64), (x,), vjp)


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if not -x.data.ndim <= axis < x.data.ndim:
        raise ShapeError("softmax", x.shape)
    shifted = np.exp(x.data - np.max(x.data, axis=axis, keepdims=True))
    value = shifted / np.sum(shifted, axis=axis, keepdims=True)

    def vjp(g):
        return (value * (g - np.sum(g * value, axis=axis, keepdims=True)),)

    return _emit(value, (x,), vjp)


def sum_of_squares(x) -> Tensor:
    x = as_tensor(x)
    return _emit(np.asarray(np.sum(x.data * x.data)), (x,), lambda g: (2.0 * g * x.data,))


def dropout(x, keep_prob: float, mask: np.ndarray | None = None) -> Tensor:
    """Inverted dropout: kept units are scaled by 1/keep_prob."""
    x = as_tensor(x)
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"dropout: keep probability {keep_prob} outside (0, 1]")
    if keep_prob == 1.0:
        return x
    if mask is None or np.shape(mask) != x.shape:
        raise ShapeError("dropout", x.shape, np.shape(mask))
    scale = np.asarray(mask, dtype=np.float64) / keep_prob
    return _emit(x.data * scale, (x,), lambda g: (g * scale,))


# ##################################################################
# structural primitives


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        value = np.concatenate([p.data for p in parts], axis=axis)
    except (ValueError, IndexError):
        raise ShapeError("concat", *(p.shape for p in parts)) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit(value, parts, vjp)


def stack(tensors: Sequence) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    parts = [as_tensor(t) for t in tensors]
    if not parts or any(p.shape != parts[0].shape for p in parts):
        raise ShapeError("stack", *(p.shape for p in parts))
    value = np.stack([p.data for p in parts])
    return _emit(value, parts, lambda g: tuple(g[i] for i in range(len(parts))))


def take_row(x, index: int) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim < 1 or not -x.shape[0] <= index < x.shape[0]:
        raise ShapeError("take_row", x.shape)

    def vjp(g):
        full = np.zeros(x.shape)
        full[index] = g
        return (full,)

    return _emit(x.data[index].copy(), (x,), vjp)


def gather_rows(x, ids: np.ndarray) -> Tensor:
    """Row lookup (embedding layer); repeated ids accumulate gradient."""
    x = as_tensor(x)
    ids = np.asarray(ids, dtype=np.int64)
    if x.data.ndim != 2 or ids.ndim != 1 or (ids.size and (ids.min() < 0 or ids.max() >= x.shape[0])):
        raise ShapeError("gather_rows", x.shape, ids.shape)

    def vjp(g):
        full = np.zeros(x.shape)
        np.add.at(full, ids, g)
        return (full,)

    return _emit(x.data[ids], (x,), vjp)


def reshape(x, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        value = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape)) from None
    return _emit(value.copy(), (x,), lambda g: (np.reshape(g, x.shape),))


def transpose(x) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim != 2:
        raise ShapeError("transpose", x.shape)
    return _emit(x.data.T.copy(), (x,), lambda g: (g.T,))
