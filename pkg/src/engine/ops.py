"""Differentiable operations on ``Tensor``.

Each operation computes its forward value with numpy and registers a backward
closure that accumulates gradients into its inputs. Feature sequences are
``channels x frames``; convolutions follow the usual layout conventions:
``conv1d`` weights are ``out x in x kernel`` and ``conv_transpose1d`` weights are
``in x out x kernel``, so the same array drives a convolution and its adjoint.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.errors import ShapeError
from src.engine.tensor import Tensor, as_tensor

Scalar = Union[int, float]


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of a 1-D convolution."""

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    output_padding: int = 0

    def __post_init__(self):
        if self.kernel_size < 1:
            raise ShapeError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.dilation < 1:
            raise ShapeError(f"dilation must be >= 1, got {self.dilation}")
        if self.padding < 0 or self.output_padding < 0:
            raise ShapeError("padding and output_padding must be non-negative")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ShapeError("in_channels and out_channels must be >= 1")

    def output_frames(self, frames: int) -> int:
        """Frames produced by the forward convolution."""
        span = self.dilation * (self.kernel_size - 1) + 1
        return (frames + 2 * self.padding - span) // self.stride + 1

    def transposed_output_frames(self, frames: int) -> int:
        """Frames produced by the transposed convolution."""
        return (
            (frames - 1) * self.stride
            + self.dilation * (self.kernel_size - 1)
            + 1
            - 2 * self.padding
            + self.output_padding
        )


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


# Elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(g, b.shape))

    return Tensor.from_op(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(-g, b.shape))

    return Tensor.from_op(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a.accumulate(_unbroadcast(g * b.data, a.shape))
        b.accumulate(_unbroadcast(g * a.data, b.shape))

    return Tensor.from_op(a.data * b.data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a.accumulate(_unbroadcast(g / b.data, a.shape))
        b.accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return Tensor.from_op(a.data / b.data, (a, b), backward)


def square(x: Tensor) -> Tensor:
    def backward(g):
        x.accumulate(2.0 * x.data * g)

    return Tensor.from_op(x.data * x.data, (x,), backward)


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)

    def backward(g):
        x.accumulate(0.5 * g / out)

    return Tensor.from_op(out, (x,), backward)


def log(x: Tensor) -> Tensor:
    def backward(g):
        x.accumulate(g / x.data)

    return Tensor.from_op(np.log(x.data), (x,), backward)


def absolute(x: Tensor) -> Tensor:
    def backward(g):
        x.accumulate(g * np.sign(x.data))

    return Tensor.from_op(np.abs(x.data), (x,), backward)


def clamp_min(x: Tensor, floor: float) -> Tensor:
    """``max(x, floor)``; the gradient flows only where ``x`` is above the floor."""
    mask = x.data > floor

    def backward(g):
        x.accumulate(g * mask)

    return Tensor.from_op(np.where(mask, x.data, floor).astype(x.dtype), (x,), backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward(g):
        x.accumulate(g * (1.0 - out * out))

    return Tensor.from_op(out, (x,), backward)


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    """Elementwise ``max(x, slope * x)`` for ``slope`` in (0, 1)."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must be in (0, 1), got {slope}")
    positive = x.data >= 0

    def backward(g):
        x.accumulate(np.where(positive, g, slope * g))

    return Tensor.from_op(np.where(positive, x.data, slope * x.data), (x,), backward)


# Reductions and shape plumbing


def sum_all(x: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is None:
            x.accumulate(np.broadcast_to(g, x.shape))
        else:
            x.accumulate(np.broadcast_to(np.expand_dims(g, axis), x.shape))

    return Tensor.from_op(np.asarray(x.data.sum(axis=axis)), (x,), backward)


def mean(x: Tensor) -> Tensor:
    count = x.size

    def backward(g):
        x.accumulate(np.broadcast_to(g / count, x.shape))

    return Tensor.from_op(np.asarray(x.data.mean()), (x,), backward)


def _has_advanced_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return any(isinstance(k, (np.ndarray, list)) for k in parts)


def getitem(x: Tensor, key) -> Tensor:
    """Indexing and slicing; gathered positions scatter-add on the way back."""
    advanced = _has_advanced_index(key)

    def backward(g):
        grad = np.zeros_like(x.data)
        if advanced:
            np.add.at(grad, key, g)
        else:
            grad[key] += g
        x.accumulate(grad)

    return Tensor.from_op(np.asarray(x.data[key]), (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(g):
        x.accumulate(g.reshape(x.shape))

    return Tensor.from_op(x.data.reshape(shape), (x,), backward)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    tensors = list(tensors)

    def backward(g):
        for i, t in enumerate(tensors):
            t.accumulate(g[i])

    return Tensor.from_op(np.stack([t.data for t in tensors]), tensors, backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions {a.shape[-1]} != {b.shape[0]}")

    def backward(g):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)

    return Tensor.from_op(a.data @ b.data, (a, b), backward)


def softmax(logits: Tensor) -> Tensor:
    """Softmax over a 1-D logits vector."""
    shifted = logits.data - logits.data.max()
    exp = np.exp(shifted)
    out = exp / exp.sum()

    def backward(g):
        logits.accumulate(out * (g - np.dot(g, out)))

    return Tensor.from_op(out, (logits,), backward)


def mix(weights: Tensor, stacked: Tensor) -> Tensor:
    """Weighted sum over the leading axis: ``sum_i weights[i] * stacked[i]``."""
    weights, stacked = _pair(weights, stacked)
    if weights.ndim != 1 or weights.shape[0] != stacked.shape[0]:
        raise ShapeError(
            f"mix: {weights.shape[0] if weights.ndim else 0} weights for "
            f"{stacked.shape[0]} stacked entries"
        )

    def backward(g):
        weights.accumulate(np.tensordot(stacked.data, g, axes=g.ndim).reshape(weights.shape))
        stacked.accumulate(weights.data.reshape((-1,) + (1,) * g.ndim) * g)

    return Tensor.from_op(np.tensordot(weights.data, stacked.data, axes=1), (weights, stacked), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Look up rows of ``table`` (entries x dims) and return a ``dims x len(ids)`` sequence."""
    ids = np.asarray(ids, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids, g.T)
        table.accumulate(grad)

    return Tensor.from_op(np.ascontiguousarray(table.data[ids].T), (table,), backward)


# Convolutions


def _check_conv(x: Tensor, spec: ConvSpec, weight: Tensor, transposed: bool, op: str) -> None:
    if x.ndim != 2:
        raise ShapeError(f"{op}: input must be channels x frames, got rank {x.ndim}")
    if x.shape[0] != spec.in_channels:
        raise ShapeError(
            f"{op}: input channels {x.shape[0]} != spec.in_channels {spec.in_channels}"
        )
    expected = (
        (spec.in_channels, spec.out_channels, spec.kernel_size)
        if transposed
        else (spec.out_channels, spec.in_channels, spec.kernel_size)
    )
    if weight.shape != expected:
        names = ("in", "out", "kernel") if transposed else ("out", "in", "kernel")
        for name, got, want in zip(names, weight.shape, expected):
            if got != want:
                raise ShapeError(f"{op}: weight {name} dimension {got} != {want}")
        raise ShapeError(f"{op}: weight shape {weight.shape} != {expected}")


def _check_bias(bias: Optional[Tensor], out_channels: int, op: str) -> None:
    if bias is not None and bias.shape != (out_channels,):
        raise ShapeError(f"{op}: bias length {bias.shape} != out_channels {out_channels}")


def conv1d(x: Tensor, spec: ConvSpec, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Strided, padded, dilated 1-D convolution (cross-correlation)."""
    _check_conv(x, spec, weight, transposed=False, op="conv1d")
    _check_bias(bias, spec.out_channels, "conv1d")
    frames = x.shape[1]
    out_frames = spec.output_frames(frames)
    if out_frames < 1:
        raise ShapeError(
            f"conv1d: {frames} frames too short for kernel {spec.kernel_size} "
            f"(dilation {spec.dilation}, padding {spec.padding})"
        )
    pad, stride, dil = spec.padding, spec.stride, spec.dilation
    span = dil * (spec.kernel_size - 1) + 1
    padded = np.pad(x.data, ((0, 0), (pad, pad))) if pad else x.data
    windows = sliding_window_view(padded, span, axis=1)[:, ::stride, ::dil][:, :out_frames]
    out = np.tensordot(weight.data, windows, axes=([1, 2], [0, 2]))
    if bias is not None:
        out = out + bias.data[:, None]
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        if weight.requires_grad:
            weight.accumulate(np.tensordot(g, windows, axes=([1], [1])))
        if bias is not None:
            bias.accumulate(g.sum(axis=1))
        if x.requires_grad:
            cols = np.tensordot(weight.data, g, axes=([0], [0]))
            grad = np.zeros_like(padded)
            stop = stride * (out_frames - 1) + 1
            for k in range(spec.kernel_size):
                start = k * dil
                grad[:, start : start + stop : stride] += cols[:, k, :]
            x.accumulate(grad[:, pad : pad + frames])

    return Tensor.from_op(out.astype(x.dtype, copy=False), parents, backward)


def conv_transpose1d(
    x: Tensor, spec: ConvSpec, weight: Tensor, bias: Optional[Tensor] = None
) -> Tensor:
    """Transposed 1-D convolution, the adjoint of ``conv1d`` with the same weights."""
    _check_conv(x, spec, weight, transposed=True, op="conv_transpose1d")
    _check_bias(bias, spec.out_channels, "conv_transpose1d")
    frames = x.shape[1]
    out_frames = spec.transposed_output_frames(frames)
    if out_frames < 1:
        raise ShapeError(f"conv_transpose1d: padding {spec.padding} crops all output frames")
    stride, dil, pad = spec.stride, spec.dilation, spec.padding
    full_frames = (frames - 1) * stride + dil * (spec.kernel_size - 1) + 1 + spec.output_padding
    stop = stride * (frames - 1) + 1
    cols = np.tensordot(weight.data, x.data, axes=([0], [0]))
    full = np.zeros((spec.out_channels, full_frames), dtype=x.dtype)
    for k in range(spec.kernel_size):
        start = k * dil
        full[:, start : start + stop : stride] += cols[:, k, :]
    out = full[:, pad : pad + out_frames]
    if bias is not None:
        out = out + bias.data[:, None]
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        grad_full = np.zeros_like(full)
        grad_full[:, pad : pad + out_frames] = g
        grad_cols = np.stack(
            [grad_full[:, k * dil : k * dil + stop : stride] for k in range(spec.kernel_size)],
            axis=1,
        )
        if weight.requires_grad:
            weight.accumulate(np.tensordot(x.data, grad_cols, axes=([1], [2])))
        if bias is not None:
            bias.accumulate(g.sum(axis=1))
        if x.requires_grad:
            x.accumulate(np.tensordot(weight.data, grad_cols, axes=([1, 2], [0, 1])))

    return Tensor.from_op(np.ascontiguousarray(out).astype(x.dtype, copy=False), parents, backward)


# Losses used across the vocoder


def mean_abs_diff(a: Tensor, b) -> Tensor:
    """Mean absolute difference (L1)."""
    return mean(absolute(sub(a, b)))


def mean_square(x: Tensor) -> Tensor:
    return mean(square(x))
