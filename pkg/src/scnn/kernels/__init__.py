"""Hot-kernel backend selection.

The package ships two interchangeable implementations of the convolution
and pooling kernels that dominate training time: a Cython extension
(`scnn.kernels._core`) and a NumPy fallback (`scnn.kernels.reference`).
They trade places depending on problem size. The compiled loops carry far
less per-call overhead, so they win on small workloads; the NumPy path
lowers the convolution to a BLAS matmul, which wins once there is enough
arithmetic to amortize its setup. Measured crossovers live in
`benchmarks/bench_kernels.py`.

Selection is controlled by the SCNN_KERNELS environment variable:

- ``auto`` (default): when the extension is importable, convolution calls
  are routed per call by estimated work (multiply-accumulate count) and
  pooling always uses the extension; otherwise everything falls back to
  NumPy.
- ``compiled``: force the extension for every call (raises if not built).
- ``python``: force the NumPy implementation for every call.

`BACKEND` records the outcome: "compiled", "python", or "adaptive".
"""

from __future__ import annotations

import importlib
import os

from scnn.errors import ConfigError
from scnn.kernels import reference

# Measured crossover for the conv kernels on the benchmark machine: below
# roughly 5e4 multiply-accumulates the extension's lower call overhead wins,
# above it BLAS does. The exact value is not critical; both sides are
# correct and within ~2x of each other near the boundary.
CONV_WORK_THRESHOLD = 50_000

_requested = os.environ.get("SCNN_KERNELS", "auto")
if _requested not in ("auto", "compiled", "python"):
    raise ConfigError(
        f"SCNN_KERNELS must be one of auto, compiled, python; got {_requested!r}"
    )

_core = None
if _requested in ("auto", "compiled"):
    try:
        _core = importlib.import_module("scnn.kernels._core")
    except ImportError:
        if _requested == "compiled":
            raise

if _requested == "python" or _core is None:
    BACKEND = "python"
    conv_bank_forward = reference.conv_bank_forward
    conv_bank_grad_input = reference.conv_bank_grad_input
    conv_bank_grad_kernel = reference.conv_bank_grad_kernel
    max_pool_time_forward = reference.max_pool_time_forward
    max_pool_time_backward = reference.max_pool_time_backward
elif _requested == "compiled":
    BACKEND = "compiled"
    conv_bank_forward = _core.conv_bank_forward
    conv_bank_grad_input = _core.conv_bank_grad_input
    conv_bank_grad_kernel = _core.conv_bank_grad_kernel
    max_pool_time_forward = _core.max_pool_time_forward
    max_pool_time_backward = _core.max_pool_time_backward
else:
    BACKEND = "adaptive"

    def conv_bank_forward(inputs, kernels, bias):
        b, n, d = inputs.shape
        f, h, _ = kernels.shape
        work = b * f * (n - h + 1) * h * d
        impl = _core if work < CONV_WORK_THRESHOLD else reference
        return impl.conv_bank_forward(inputs, kernels, bias)

    def conv_bank_grad_input(kernels, grad_out, n):
        f, h, d = kernels.shape
        b = grad_out.shape[0]
        work = b * f * grad_out.shape[2] * h * d
        impl = _core if work < CONV_WORK_THRESHOLD else reference
        return impl.conv_bank_grad_input(kernels, grad_out, n)

    def conv_bank_grad_kernel(inputs, grad_out):
        b, n, d = inputs.shape
        length = grad_out.shape[2]
        work = b * grad_out.shape[1] * length * (n - length + 1) * d
        impl = _core if work < CONV_WORK_THRESHOLD else reference
        return impl.conv_bank_grad_kernel(inputs, grad_out)

    # The pooling loops beat NumPy's max+argmax double pass at every size
    # we measured, so no per-call decision is needed.
    max_pool_time_forward = _core.max_pool_time_forward
    max_pool_time_backward = _core.max_pool_time_backward


def available_backends() -> dict:
    """Importable backend modules keyed by name."""
    found = {"python": reference}
    try:
        found["compiled"] = importlib.import_module("scnn.kernels._core")
    except ImportError:
        pass
    return found
