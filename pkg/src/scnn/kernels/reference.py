"""NumPy implementations of the hot kernels.

Shape conventions (all arrays are C-contiguous float64 unless noted):

    inputs   (B, N, d)   batch of embedded sequences
    kernels  (F, h, d)   one filter bank of full-width convolution kernels
    bias     (F,)
    out      (B, F, L)   valid convolution outputs, L = N - h + 1

The convolution slides only along the sequence axis; the kernel spans the
full embedding dimension. Gradients follow directly from

    out[b, f, i] = sum_{r, c} inputs[b, i + r, c] * kernels[f, r, c] + bias[f]
"""

from __future__ import annotations

import numpy as np


def conv_bank_forward(inputs: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    batch, n, _ = inputs.shape
    filters, width, _ = kernels.shape
    length = n - width + 1
    out = np.empty((batch, length, filters))
    out[:] = bias
    for r in range(width):
        # (B, L, d) @ (d, F) accumulated over kernel rows
        out += inputs[:, r : r + length, :] @ kernels[:, r, :].T
    return np.ascontiguousarray(out.transpose(0, 2, 1))


def conv_bank_grad_input(kernels: np.ndarray, grad_out: np.ndarray, n: int) -> np.ndarray:
    batch, filters, length = grad_out.shape
    _, width, dim = kernels.shape
    grad_in = np.zeros((batch, n, dim))
    g = np.ascontiguousarray(grad_out.transpose(0, 2, 1))  # (B, L, F)
    for r in range(width):
        grad_in[:, r : r + length, :] += g @ kernels[:, r, :]
    return grad_in


def conv_bank_grad_kernel(inputs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    batch, filters, length = grad_out.shape
    width = inputs.shape[1] - length + 1
    dim = inputs.shape[2]
    grad_k = np.empty((filters, width, dim))
    for r in range(width):
        grad_k[:, r, :] = np.tensordot(grad_out, inputs[:, r : r + length, :], axes=([0, 2], [0, 1]))
    return grad_k


def max_pool_time_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max over the last axis; ties resolve to the lowest index."""
    idx = np.argmax(x, axis=-1)
    vals = np.take_along_axis(x, idx[..., None], axis=-1)[..., 0]
    return vals, idx.astype(np.int64)


def max_pool_time_backward(idx: np.ndarray, grad_vals: np.ndarray, length: int) -> np.ndarray:
    grad = np.zeros(idx.shape + (length,))
    np.put_along_axis(grad, idx[..., None], grad_vals[..., None], axis=-1)
    return grad
