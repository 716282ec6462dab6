"""Pure NumPy kernels: the fallback backend.

Convolutions are cross-correlations (no kernel flip), valid padding, stride 1.
All functions take batch-first arrays: x is (B, C, L), weights are (O, C, K).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x, w, b):
    """y[n,o,t] = b[o] + sum_{c,k} x[n,c,t+k] * w[o,c,k]."""
    windows = sliding_window_view(x, w.shape[2], axis=2)   # (B, C, T, K)
    y = np.tensordot(windows, w, axes=[[1, 3], [1, 2]])    # (B, T, O)
    y += b
    return np.ascontiguousarray(y.transpose(0, 2, 1))


def conv1d_backward(x, w, dy):
    """Gradients (dx, dw, db) of a scalar loss through conv1d_forward."""
    out_ch, in_ch, k_len = w.shape
    n_batch, _, t_len = dy.shape
    length = x.shape[2]
    db = dy.sum(axis=(0, 2))
    windows = sliding_window_view(x, k_len, axis=2)        # (B, C, T, K)
    dw = np.tensordot(dy, windows, axes=[[0, 2], [0, 2]])  # (O, C, K)
    # dx: project dy back through the weights, then scatter over the k taps.
    dcols = np.tensordot(dy, w, axes=[[1], [0]])           # (B, T, C, K)
    dx = np.zeros((n_batch, in_ch, length), dtype=x.dtype)
    for k in range(k_len):
        dx[:, :, k:k + t_len] += dcols[:, :, :, k].transpose(0, 2, 1)
    return dx, dw, db


def maxpool1d_forward(x, size, stride):
    """Returns (y, argmax) where argmax holds absolute source positions."""
    windows = sliding_window_view(x, size, axis=2)[:, :, ::stride]  # (B,C,T,size)
    within = windows.argmax(axis=3)                         # first max wins ties
    y = np.take_along_axis(windows, within[..., None], axis=3)[..., 0]
    t_out = within.shape[2]
    argmax = within + np.arange(t_out, dtype=within.dtype) * stride
    return np.ascontiguousarray(y), argmax


def maxpool1d_backward(dy, argmax, length):
    """Route each dy entry to its argmax position; zeros elsewhere."""
    n_batch, channels, t_out = dy.shape
    dx = np.zeros((n_batch, channels, length), dtype=dy.dtype)
    b_idx, c_idx = np.ogrid[:n_batch, :channels]
    b_idx = np.broadcast_to(b_idx[..., None], dy.shape)
    c_idx = np.broadcast_to(c_idx[..., None], dy.shape)
    np.add.at(dx, (b_idx, c_idx, argmax), dy)
    return dx
