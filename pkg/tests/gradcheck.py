"""Finite-difference gradient checking against the autodiff backward pass.

`check_grads` builds the loss twice per perturbed element (central
differences), so keep the tensors small. The comparison is relative with an
absolute floor, suitable for float64 and eps around 1e-6.
"""

from __future__ import annotations

import numpy as np

from scnn.tensor import Tensor


def check_grads(build_loss, arrays, eps: float = 1e-6, rtol: float = 1e-5, atol: float = 1e-8):
    """Compare analytic and numerical gradients of a scalar-valued graph.

    `build_loss` maps a list of Tensors (one per array, all requiring grad)
    to a scalar Tensor. Returns the worst relative error seen, and raises
    AssertionError with coordinates on any mismatch.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    loss = build_loss(tensors)
    loss.backward()
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors
    ]

    worst = 0.0
    for which, base in enumerate(arrays):
        flat = np.asarray(base, dtype=np.float64).copy()
        for idx in np.ndindex(flat.shape):
            plus = [a.copy() for a in arrays]
            minus = [a.copy() for a in arrays]
            plus[which][idx] += eps
            minus[which][idx] -= eps
            lp = build_loss([Tensor(a, requires_grad=False) for a in plus]).item()
            lm = build_loss([Tensor(a, requires_grad=False) for a in minus]).item()
            numeric = (lp - lm) / (2.0 * eps)
            got = analytic[which][idx]
            denom = max(abs(numeric), abs(got), 1.0)
            rel = abs(numeric - got) / denom
            worst = max(worst, rel)
            if not np.isclose(got, numeric, rtol=rtol, atol=atol):
                raise AssertionError(
                    f"gradient mismatch for input {which} at {idx}: "
                    f"analytic {got!r} vs numeric {numeric!r} (rel {rel:.3e})"
                )
    return worst
