# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
# Compiled versions of the hot kernels; see reference.py for the contracts.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_bank_forward(double[:, :, ::1] inputs, double[:, :, ::1] kernels, double[::1] bias):
    cdef Py_ssize_t batch = inputs.shape[0]
    cdef Py_ssize_t n = inputs.shape[1]
    cdef Py_ssize_t dim = inputs.shape[2]
    cdef Py_ssize_t filters = kernels.shape[0]
    cdef Py_ssize_t width = kernels.shape[1]
    cdef Py_ssize_t length = n - width + 1
    cdef Py_ssize_t b, f, i, r, c
    cdef double kv
    cdef const double* xrow
    cdef double* orow
    out_arr = np.empty((batch, filters, length))
    cdef double[:, :, ::1] out = out_arr
    # Work on a transposed (d, N) copy of each batch item so the position
    # axis is contiguous; the innermost loop is then an elementwise
    # multiply-accumulate over positions, which vectorizes cleanly. The
    # output row for one filter stays resident across all (r, c) updates.
    xt_arr = np.empty((dim, n))
    cdef double[:, ::1] xt = xt_arr
    for b in range(batch):
        for i in range(n):
            for c in range(dim):
                xt[c, i] = inputs[b, i, c]
        for f in range(filters):
            orow = &out[b, f, 0]
            kv = bias[f]
            for i in range(length):
                orow[i] = kv
            for r in range(width):
                for c in range(dim):
                    kv = kernels[f, r, c]
                    xrow = &xt[c, r]
                    for i in range(length):
                        orow[i] += kv * xrow[i]
    return out_arr


def conv_bank_grad_input(double[:, :, ::1] kernels, double[:, :, ::1] grad_out, Py_ssize_t n):
    cdef Py_ssize_t batch = grad_out.shape[0]
    cdef Py_ssize_t filters = grad_out.shape[1]
    cdef Py_ssize_t length = grad_out.shape[2]
    cdef Py_ssize_t width = kernels.shape[1]
    cdef Py_ssize_t dim = kernels.shape[2]
    cdef Py_ssize_t b, f, i, r, c
    cdef double kv
    cdef const double* grow
    cdef double* trow
    grad_arr = np.empty((batch, n, dim))
    cdef double[:, :, ::1] grad_in = grad_arr
    # Same transposed-scratch trick as the forward pass: accumulate into a
    # (d, N) buffer whose position axis is contiguous, then transpose back.
    gt_arr = np.empty((dim, n))
    cdef double[:, ::1] gt = gt_arr
    for b in range(batch):
        for c in range(dim):
            for i in range(n):
                gt[c, i] = 0.0
        for f in range(filters):
            grow = &grad_out[b, f, 0]
            for r in range(width):
                for c in range(dim):
                    kv = kernels[f, r, c]
                    trow = &gt[c, r]
                    for i in range(length):
                        trow[i] += kv * grow[i]
        for i in range(n):
            for c in range(dim):
                grad_in[b, i, c] = gt[c, i]
    return grad_arr


def conv_bank_grad_kernel(double[:, :, ::1] inputs, double[:, :, ::1] grad_out):
    cdef Py_ssize_t batch = grad_out.shape[0]
    cdef Py_ssize_t filters = grad_out.shape[1]
    cdef Py_ssize_t length = grad_out.shape[2]
    cdef Py_ssize_t width = inputs.shape[1] - length + 1
    cdef Py_ssize_t dim = inputs.shape[2]
    cdef Py_ssize_t row = width * dim
    cdef Py_ssize_t b, f, i, c
    cdef double g
    cdef const double* xp
    cdef double* gk
    grad_arr = np.zeros((filters, width, dim))
    cdef double[:, :, ::1] grad_k = grad_arr
    for b in range(batch):
        for f in range(filters):
            gk = &grad_k[f, 0, 0]
            for i in range(length):
                g = grad_out[b, f, i]
                if g == 0.0:
                    continue
                xp = &inputs[b, i, 0]
                for c in range(row):
                    gk[c] += g * xp[c]
    return grad_arr


def max_pool_time_forward(double[:, :, ::1] x):
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t filters = x.shape[1]
    cdef Py_ssize_t length = x.shape[2]
    cdef Py_ssize_t b, f, i
    cdef double best
    cdef Py_ssize_t best_i
    vals_arr = np.empty((batch, filters))
    idx_arr = np.empty((batch, filters), dtype=np.int64)
    cdef double[:, ::1] vals = vals_arr
    cdef cnp.int64_t[:, ::1] idx = idx_arr
    for b in range(batch):
        for f in range(filters):
            best = x[b, f, 0]
            best_i = 0
            for i in range(1, length):
                if x[b, f, i] > best:
                    best = x[b, f, i]
                    best_i = i
            vals[b, f] = best
            idx[b, f] = best_i
    return vals_arr, idx_arr


def max_pool_time_backward(cnp.int64_t[:, ::1] idx, double[:, ::1] grad_vals, Py_ssize_t length):
    cdef Py_ssize_t batch = idx.shape[0]
    cdef Py_ssize_t filters = idx.shape[1]
    cdef Py_ssize_t b, f
    grad_arr = np.zeros((batch, filters, length))
    cdef double[:, :, ::1] grad = grad_arr
    for b in range(batch):
        for f in range(filters):
            grad[b, f, idx[b, f]] = grad_vals[b, f]
    return grad_arr
