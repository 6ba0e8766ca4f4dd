"""Kernel backends: parity between implementations and selection rules."""

import os
import subprocess
import sys

import numpy as np
import pytest

import scnn.kernels as K
from scnn.kernels import available_backends, reference

_BACKENDS = available_backends()
needs_ext = pytest.mark.skipif(
    "compiled" not in _BACKENDS, reason="compiled extension not built"
)


def _cases():
    rng = np.random.default_rng(7)
    shapes = [(1, 3, 1, 1, 3), (2, 10, 8, 3, 3), (5, 17, 12, 9, 4), (4, 25, 30, 16, 5)]
    for batch, n, dim, filters, width in shapes:
        x = rng.standard_normal((batch, n, dim))
        kern = rng.standard_normal((filters, width, dim))
        bias = rng.standard_normal(filters)
        grad_out = rng.standard_normal((batch, filters, n - width + 1))
        yield x, kern, bias, grad_out, n


@needs_ext
def test_conv_kernels_agree_across_backends():
    compiled = _BACKENDS["compiled"]
    for x, kern, bias, grad_out, n in _cases():
        np.testing.assert_allclose(
            compiled.conv_bank_forward(x, kern, bias),
            reference.conv_bank_forward(x, kern, bias),
            atol=1e-12,
        )
        np.testing.assert_allclose(
            compiled.conv_bank_grad_input(kern, grad_out, n),
            reference.conv_bank_grad_input(kern, grad_out, n),
            atol=1e-12,
        )
        np.testing.assert_allclose(
            compiled.conv_bank_grad_kernel(x, grad_out),
            reference.conv_bank_grad_kernel(x, grad_out),
            atol=1e-12,
        )


@needs_ext
def test_pooling_agrees_including_tie_breaks():
    compiled = _BACKENDS["compiled"]
    rng = np.random.default_rng(11)
    x = rng.standard_normal((4, 6, 9))
    # manufacture exact ties so the lowest-index rule is actually exercised
    x[0, 0, :] = 3.0
    x[1, 2, 4] = x[1, 2, 1] = x[1, 2].max() + 1.0
    cv, ci = compiled.max_pool_time_forward(x)
    rv, ri = reference.max_pool_time_forward(x)
    np.testing.assert_array_equal(cv, rv)
    np.testing.assert_array_equal(ci, ri)
    assert ci[0, 0] == 0
    assert ci[1, 2] == 1

    grad = rng.standard_normal(cv.shape)
    np.testing.assert_array_equal(
        compiled.max_pool_time_backward(ci, grad, 9),
        reference.max_pool_time_backward(ri, grad, 9),
    )


def test_reference_forward_against_direct_loops():
    x, kern, bias, _, _ = next(_cases())
    out = reference.conv_bank_forward(x, kern, bias)
    batch, n, _ = x.shape
    filters, width, _ = kern.shape
    for b in range(batch):
        for f in range(filters):
            for i in range(n - width + 1):
                expected = np.sum(x[b, i : i + width] * kern[f]) + bias[f]
                assert abs(out[b, f, i] - expected) < 1e-12


def test_grad_input_is_adjoint_of_forward():
    # <conv(x), g> must equal <x, conv_grad_input(g)> for the pair to be a
    # true adjoint; this catches indexing errors a fixed oracle might miss.
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 9, 5))
    kern = rng.standard_normal((4, 3, 5))
    g = rng.standard_normal((3, 4, 7))
    fwd = reference.conv_bank_forward(x, kern, np.zeros(4))
    lhs = np.sum(fwd * g)
    rhs = np.sum(x * reference.conv_bank_grad_input(kern, g, 9))
    assert abs(lhs - rhs) < 1e-10
    rhs_k = np.sum(kern * reference.conv_bank_grad_kernel(x, g))
    assert abs(lhs - rhs_k) < 1e-10


def _run_with_env(value):
    env = dict(os.environ, SCNN_KERNELS=value)
    code = "import scnn.kernels as K; print(K.BACKEND)"
    return subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )


def test_env_forces_python_backend():
    result = _run_with_env("python")
    assert result.returncode == 0
    assert result.stdout.strip() == "python"


@needs_ext
def test_env_forces_compiled_backend():
    result = _run_with_env("compiled")
    assert result.returncode == 0
    assert result.stdout.strip() == "compiled"


def test_env_rejects_unknown_backend():
    result = _run_with_env("fortran")
    assert result.returncode != 0
    assert "SCNN_KERNELS" in result.stderr


@needs_ext
def test_auto_backend_is_adaptive():
    result = _run_with_env("auto")
    assert result.stdout.strip() == "adaptive"


def test_dispatcher_matches_reference_on_both_sides_of_threshold():
    rng = np.random.default_rng(5)
    small = rng.standard_normal((1, 6, 4)), rng.standard_normal((2, 3, 4))
    large = rng.standard_normal((32, 40, 64)), rng.standard_normal((16, 4, 64))
    for x, kern in (small, large):
        bias = rng.standard_normal(kern.shape[0])
        np.testing.assert_allclose(
            K.conv_bank_forward(x, kern, bias),
            reference.conv_bank_forward(x, kern, bias),
            atol=1e-12,
        )
