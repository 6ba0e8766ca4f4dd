"""Dense float64 tensors with reverse-mode automatic differentiation.

A `Tensor` is a node in a computation graph: it carries a value, an
accumulated gradient of the same shape, references to the nodes it was
computed from, and the local backward rule of the producing operation.
Graphs are built per forward pass and torn down after `backward`; there is
no persistent tape. Every forward and backward result is checked for
NaN/Inf and raises `NonFiniteError` on the first occurrence.

Only the small set of operations the convolutional text models need is
provided; there is no general broadcasting.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from scnn import kernels
from scnn.errors import GraphError, NonFiniteError, ShapeError

__all__ = [
    "Tensor",
    "no_grad",
    "matmul",
    "conv_valid",
    "conv_bank",
    "max_over_time",
    "max_pool_time",
    "gather_rows",
    "concat_cols",
    "add",
    "add_bias",
    "mul",
    "tsum",
    "tmean",
]


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values produced in {what}")


class no_grad:
    """Context manager that skips graph construction inside its scope."""

    _active = False

    def __enter__(self):
        self._prev = no_grad._active
        no_grad._active = True
        return self

    def __exit__(self, *exc):
        no_grad._active = self._prev
        return False


class Tensor:
    """Value + gradient node of the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        _check_finite(self.data, "tensor construction")
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None
        self.name = name

    # -- graph plumbing ------------------------------------------------

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], what: str) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(data, dtype=np.float64)
        _check_finite(out.data, what)
        out.grad = None
        out.requires_grad = (not no_grad._active) and any(p.requires_grad for p in parents)
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = None
        out.name = None
        return out

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's `.grad`.

        `self` must hold a single scalar. Gradients sum over all paths; leaves
        that do not influence the loss keep a zero (unallocated) gradient.
        """
        if self.data.size != 1:
            raise GraphError(f"backward requires a scalar loss, got shape {self.data.shape}")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward()
        for node in order:
            if node.grad is not None:
                _check_finite(node.grad, "backward pass")
            # free the graph; values and gradients stay usable
            node._parents = ()
            node._backward = None


def _shapes(*tensors: Tensor) -> str:
    return " and ".join(str(t.data.shape) for t in tensors)


# -- primitive operations ----------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a (m, k) by b (k, n)."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul requires (m,k) by (k,n), got {_shapes(a, b)}")
    out = Tensor._from_op(a.data @ b.data, (a, b), "matmul")
    if out.requires_grad:

        def backward():
            if a.requires_grad:
                a._accum(out.grad @ b.data.T)
            if b.requires_grad:
                b._accum(a.data.T @ out.grad)

        out._backward = backward
    return out


def conv_bank(inputs: Tensor, kernel_bank: Tensor, bias: Tensor) -> Tensor:
    """Valid convolution of a batch (B, N, d) with a filter bank (F, h, d).

    Returns (B, F, N-h+1). Kernels span the full embedding dimension and
    slide along the sequence axis only.
    """
    if inputs.data.ndim != 3 or kernel_bank.data.ndim != 3:
        raise ShapeError(f"conv_bank requires (B,N,d) and (F,h,d), got {_shapes(inputs, kernel_bank)}")
    _, n, d = inputs.data.shape
    f, h, dk = kernel_bank.data.shape
    if dk != d:
        raise ShapeError(f"kernel width {dk} must equal embedding dimension {d}")
    if h > n:
        raise ShapeError(f"invalid window: kernel height {h} exceeds sequence length {n}")
    if bias.data.shape != (f,):
        raise ShapeError(f"bias shape {bias.data.shape} must be ({f},)")
    out = Tensor._from_op(
        kernels.conv_bank_forward(inputs.data, kernel_bank.data, bias.data),
        (inputs, kernel_bank, bias),
        "conv_bank",
    )
    if out.requires_grad:

        def backward():
            if inputs.requires_grad:
                inputs._accum(kernels.conv_bank_grad_input(kernel_bank.data, out.grad, n))
            if kernel_bank.requires_grad:
                kernel_bank._accum(kernels.conv_bank_grad_kernel(inputs.data, out.grad))
            if bias.requires_grad:
                bias._accum(out.grad.sum(axis=(0, 2)))

        out._backward = backward
    return out


def conv_valid(inputs: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """Valid convolution of one sequence (N, d) with one kernel (h, d).

    out[i] = sum_{r,c} inputs[i+r, c] * kernel[r, c] + bias, length N-h+1.
    """
    if inputs.data.ndim != 2 or kernel.data.ndim != 2:
        raise ShapeError(f"conv_valid requires (N,d) and (h,d), got {_shapes(inputs, kernel)}")
    if bias.data.size != 1:
        raise ShapeError(f"bias must be a scalar, got shape {bias.data.shape}")
    n, d = inputs.data.shape
    h, dk = kernel.data.shape
    if dk != d:
        raise ShapeError(f"kernel width {dk} must equal input width {d}")
    if h > n:
        raise ShapeError(f"invalid window: kernel height {h} exceeds input length {n}")
    data = kernels.conv_bank_forward(
        inputs.data[None, :, :], kernel.data[None, :, :], bias.data.reshape(1)
    )[0, 0]
    out = Tensor._from_op(data, (inputs, kernel, bias), "conv_valid")
    if out.requires_grad:

        def backward():
            g = out.grad[None, None, :]
            if inputs.requires_grad:
                inputs._accum(kernels.conv_bank_grad_input(kernel.data[None], g, n)[0])
            if kernel.requires_grad:
                kernel._accum(kernels.conv_bank_grad_kernel(inputs.data[None], g)[0])
            if bias.requires_grad:
                bias._accum(out.grad.sum().reshape(bias.data.shape))

        out._backward = backward
    return out


def max_pool_time(x: Tensor) -> Tensor:
    """Max over the last axis of (B, F, L) -> (B, F); ties go to the lowest index."""
    if x.data.ndim != 3:
        raise ShapeError(f"max_pool_time requires (B,F,L), got {x.data.shape}")
    vals, idx = kernels.max_pool_time_forward(x.data)
    out = Tensor._from_op(vals, (x,), "max_pool_time")
    if out.requires_grad:
        length = x.data.shape[2]

        def backward():
            x._accum(kernels.max_pool_time_backward(idx, out.grad, length))

        out._backward = backward
    return out


def max_over_time(x: Tensor) -> Tensor:
    """Maximum element of a vector (L,) as a scalar tensor.

    The backward pass routes the whole incoming gradient to exactly one
    winning index (the lowest, under ties).
    """
    if x.data.ndim != 1 or x.data.size < 1:
        raise ShapeError(f"max_over_time requires a non-empty vector, got shape {x.data.shape}")
    idx = int(np.argmax(x.data))
    out = Tensor._from_op(x.data[idx], (x,), "max_over_time")
    if out.requires_grad:

        def backward():
            g = np.zeros_like(x.data)
            g[idx] = out.grad.reshape(-1)[0]
            x._accum(g)

        out._backward = backward
    return out


def gather_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Index rows of (V, d) by an integer array, e.g. (B, N) -> (B, N, d)."""
    ids = np.asarray(ids)
    if table.data.ndim != 2:
        raise ShapeError(f"gather_rows requires a (V,d) table, got {table.data.shape}")
    out = Tensor._from_op(table.data[ids], (table,), "gather_rows")
    if out.requires_grad:

        def backward():
            if table.requires_grad:
                if table.grad is None:
                    table.grad = np.zeros_like(table.data)
                np.add.at(table.grad, ids, out.grad)

        out._backward = backward
    return out


def concat_cols(parts: Iterable[Tensor]) -> Tensor:
    """Concatenate (B, F_i) blocks along the feature axis."""
    parts = list(parts)
    if not parts:
        raise ShapeError("concat_cols requires at least one tensor")
    rows = parts[0].data.shape[0]
    for p in parts:
        if p.data.ndim != 2 or p.data.shape[0] != rows:
            raise ShapeError(f"concat_cols requires matching (B,F_i) blocks, got {_shapes(*parts)}")
    out = Tensor._from_op(np.concatenate([p.data for p in parts], axis=1), parts, "concat_cols")
    if out.requires_grad:
        widths = [p.data.shape[1] for p in parts]

        def backward():
            start = 0
            for p, w in zip(parts, widths):
                if p.requires_grad:
                    p._accum(out.grad[:, start : start + w])
                start += w

        out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add requires equal shapes, got {_shapes(a, b)}")
    out = Tensor._from_op(a.data + b.data, (a, b), "add")
    if out.requires_grad:

        def backward():
            if a.requires_grad:
                a._accum(out.grad)
            if b.requires_grad:
                b._accum(out.grad)

        out._backward = backward
    return out


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a (k,) bias row to every row of (B, k)."""
    if x.data.ndim != 2 or bias.data.shape != (x.data.shape[1],):
        raise ShapeError(f"add_bias requires (B,k) and (k,), got {_shapes(x, bias)}")
    out = Tensor._from_op(x.data + bias.data, (x, bias), "add_bias")
    if out.requires_grad:

        def backward():
            if x.requires_grad:
                x._accum(out.grad)
            if bias.requires_grad:
                bias._accum(out.grad.sum(axis=0))

        out._backward = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul requires equal shapes, got {_shapes(a, b)}")
    out = Tensor._from_op(a.data * b.data, (a, b), "mul")
    if out.requires_grad:

        def backward():
            if a.requires_grad:
                a._accum(out.grad * b.data)
            if b.requires_grad:
                b._accum(out.grad * a.data)

        out._backward = backward
    return out


def tsum(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    out = Tensor._from_op(x.data.sum(), (x,), "sum")
    if out.requires_grad:

        def backward():
            x._accum(np.full_like(x.data, out.grad.reshape(-1)[0]))

        out._backward = backward
    return out


def tmean(x: Tensor) -> Tensor:
    """Mean of all elements, as a scalar tensor."""
    out = Tensor._from_op(x.data.mean(), (x,), "mean")
    if out.requires_grad:
        inv = 1.0 / x.data.size

        def backward():
            x._accum(np.full_like(x.data, out.grad.reshape(-1)[0] * inv))

        out._backward = backward
    return out
