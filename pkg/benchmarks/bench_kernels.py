"""Compare the compiled and NumPy kernel backends across workload sizes.

Times the three convolution kernels and the pooling pair on a range of
shapes, from tiny (where per-call overhead dominates) to full training
size (where BLAS throughput dominates), and verifies both backends agree
on every shape before timing them. The final column shows which backend
the adaptive dispatcher would pick.

Run:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --reps 50 --check
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from scnn.kernels import CONV_WORK_THRESHOLD, available_backends, reference

# (batch, sentence length, embed dim, filters per width, kernel width)
SHAPES = [
    (2, 10, 8, 2, 3),
    (8, 16, 16, 8, 3),
    (16, 24, 32, 16, 4),
    (50, 32, 50, 70, 4),
    (50, 60, 300, 70, 4),
    (50, 60, 300, 100, 5),
]


def _time(fn, reps: int) -> float:
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps * 1e3


def bench_shape(shape, backends, reps: int, check: bool) -> list[dict]:
    batch, n, dim, filters, width = shape
    length = n - width + 1
    rng = np.random.default_rng(20240317)
    x = rng.standard_normal((batch, n, dim))
    kern = rng.standard_normal((filters, width, dim))
    bias = rng.standard_normal(filters)
    grad_out = rng.standard_normal((batch, filters, length))
    conv_out = reference.conv_bank_forward(x, kern, bias)
    pooled, idx = reference.max_pool_time_forward(conv_out)
    grad_pool = rng.standard_normal(pooled.shape)

    if check:
        for name, mod in backends.items():
            if mod is reference:
                continue
            np.testing.assert_allclose(
                mod.conv_bank_forward(x, kern, bias),
                reference.conv_bank_forward(x, kern, bias),
                atol=1e-12,
                err_msg=f"{name} forward disagrees at {shape}",
            )
            np.testing.assert_allclose(
                mod.conv_bank_grad_input(kern, grad_out, n),
                reference.conv_bank_grad_input(kern, grad_out, n),
                atol=1e-12,
            )
            np.testing.assert_allclose(
                mod.conv_bank_grad_kernel(x, grad_out),
                reference.conv_bank_grad_kernel(x, grad_out),
                atol=1e-12,
            )

    ops = {
        "conv_forward": lambda m: m.conv_bank_forward(x, kern, bias),
        "conv_grad_input": lambda m: m.conv_bank_grad_input(kern, grad_out, n),
        "conv_grad_kernel": lambda m: m.conv_bank_grad_kernel(x, grad_out),
        "max_pool_fwd": lambda m: m.max_pool_time_forward(conv_out),
        "max_pool_bwd": lambda m: m.max_pool_time_backward(idx, grad_pool, length),
    }
    work = batch * filters * length * width * dim
    rows = []
    for op_name, op in ops.items():
        row = {"shape": shape, "op": op_name, "work": work}
        for backend_name, mod in backends.items():
            row[backend_name] = _time(lambda: op(mod), reps)
        if op_name.startswith("conv"):
            row["auto"] = "compiled" if work < CONV_WORK_THRESHOLD else "python"
        else:
            row["auto"] = "compiled" if "compiled" in backends else "python"
        rows.append(row)
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=30, help="timed repetitions per op")
    parser.add_argument(
        "--check",
        action="store_true",
        help="assert backend agreement (atol 1e-12) before timing",
    )
    args = parser.parse_args(argv)

    backends = available_backends()
    print("backends:", ", ".join(sorted(backends)))
    if "compiled" not in backends:
        print("compiled extension not built; timing the NumPy backend only")
    print(f"adaptive threshold: {CONV_WORK_THRESHOLD:,} multiply-accumulates")
    print()

    header = f"{'shape (B,N,d,F,h)':>22}  {'op':<18} {'work':>13}"
    for name in sorted(backends):
        header += f" {name + ' (ms)':>14}"
    header += f" {'auto picks':>10}"
    print(header)
    print("-" * len(header))
    for shape in SHAPES:
        for row in bench_shape(shape, backends, args.reps, args.check):
            line = f"{str(row['shape']):>22}  {row['op']:<18} {row['work']:>13,}"
            for name in sorted(backends):
                line += f" {row[name]:>14.3f}"
            line += f" {row['auto']:>10}"
            print(line)
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
