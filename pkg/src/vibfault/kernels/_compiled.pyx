# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: direct convolution and pooling loops.

Same contracts as _numpy_core. Loops parallelize over disjoint output slices
only (batch rows for forward/dx, output channels for dw), so results are
bit-identical regardless of thread count.
"""

import numpy as np

from cython.parallel cimport prange

ctypedef fused floating:
    float
    double


def conv1d_forward(floating[:, :, ::1] x, floating[:, :, ::1] w, floating[::1] b):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t O = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t T = L - K + 1
    cdef Py_ssize_t n, o, c, k, t
    cdef floating wv
    y_np = np.empty((B, O, T), dtype=np.asarray(x).dtype)
    cdef floating[:, :, ::1] y = y_np
    with nogil:
        for n in prange(B, schedule='static'):
            for o in range(O):
                for t in range(T):
                    y[n, o, t] = b[o]
                for c in range(C):
                    for k in range(K):
                        wv = w[o, c, k]
                        for t in range(T):
                            y[n, o, t] += wv * x[n, c, t + k]
    return y_np


def conv1d_backward(floating[:, :, ::1] x, floating[:, :, ::1] w,
                    floating[:, :, ::1] dy):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t O = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t T = L - K + 1
    cdef Py_ssize_t n, o, c, k, t
    cdef floating wv, acc
    dtype = np.asarray(x).dtype
    dx_np = np.zeros((B, C, L), dtype=dtype)
    dw_np = np.zeros((O, C, K), dtype=dtype)
    db_np = np.zeros(O, dtype=dtype)
    cdef floating[:, :, ::1] dx = dx_np
    cdef floating[:, :, ::1] dw = dw_np
    cdef floating[::1] db = db_np
    with nogil:
        for n in prange(B, schedule='static'):
            for o in range(O):
                for c in range(C):
                    for k in range(K):
                        wv = w[o, c, k]
                        for t in range(T):
                            dx[n, c, t + k] += wv * dy[n, o, t]
        for o in prange(O, schedule='static'):
            for n in range(B):
                for t in range(T):
                    db[o] += dy[n, o, t]
                for c in range(C):
                    for k in range(K):
                        acc = 0
                        for t in range(T):
                            acc = acc + dy[n, o, t] * x[n, c, t + k]
                        dw[o, c, k] += acc
    return dx_np, dw_np, db_np


def maxpool1d_forward(floating[:, :, ::1] x, Py_ssize_t size, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t T = (L - size) // stride + 1
    cdef Py_ssize_t n, c, t, j, best
    cdef floating v, bestv
    y_np = np.empty((B, C, T), dtype=np.asarray(x).dtype)
    arg_np = np.empty((B, C, T), dtype=np.int64)
    cdef floating[:, :, ::1] y = y_np
    cdef long long[:, :, ::1] arg = arg_np
    with nogil:
        for n in prange(B, schedule='static'):
            for c in range(C):
                for t in range(T):
                    best = t * stride
                    bestv = x[n, c, best]
                    for j in range(1, size):
                        v = x[n, c, t * stride + j]
                        if v > bestv:       # ties keep the lowest index
                            bestv = v
                            best = t * stride + j
                    y[n, c, t] = bestv
                    arg[n, c, t] = best
    return y_np, arg_np


def maxpool1d_backward(floating[:, :, ::1] dy, long long[:, :, ::1] argmax,
                       Py_ssize_t length):
    cdef Py_ssize_t B = dy.shape[0], C = dy.shape[1], T = dy.shape[2]
    cdef Py_ssize_t n, c, t
    dx_np = np.zeros((B, C, length), dtype=np.asarray(dy).dtype)
    cdef floating[:, :, ::1] dx = dx_np
    with nogil:
        for n in prange(B, schedule='static'):
            for c in range(C):
                for t in range(T):
                    dx[n, c, argmax[n, c, t]] += dy[n, c, t]
    return dx_np
