"""Network layers: forward/backward kernels plus stateful layer classes.

Functional forms accept a single example (channels, length) or a batch
(batch, channels, length); gradients are exact for the stated forward
formulas. The layer classes cache what their backward pass needs when
invoked with training=True.
"""

import numpy as np

from . import kernels
from .errors import (KernelTooLong, LabelOutOfRange, PoolTooLong,
                     ShapeMismatch)


def _batched(x):
    """Promote (C, L) to (1, C, L); return (array, had_batch_dim)."""
    x = np.asarray(x)
    if x.ndim == 2:
        return np.ascontiguousarray(x[None]), False
    if x.ndim == 3:
        return np.ascontiguousarray(x), True
    raise ShapeMismatch(f"expected 2-D or 3-D input, got shape {x.shape}")


# --- convolution ----------------------------------------------------------

def conv1d(x, w, b):
    """Valid cross-correlation, stride 1: y[o,t] = b[o] + sum x[c,t+k] w[o,c,k]."""
    xb, batched = _batched(x)
    w = np.ascontiguousarray(w)
    b = np.ascontiguousarray(b)
    if w.ndim != 3 or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"weights {w.shape} / bias {b.shape} malformed")
    if xb.shape[1] != w.shape[1]:
        raise ShapeMismatch(
            f"input has {xb.shape[1]} channels, weights expect {w.shape[1]}")
    if w.shape[2] > xb.shape[2]:
        raise KernelTooLong(
            f"kernel {w.shape[2]} longer than input {xb.shape[2]}")
    y = kernels.conv1d_forward(xb, w, b)
    return y if batched else y[0]


def conv1d_backward(dy, x, w):
    """Gradients (dx, dw, db) for conv1d."""
    xb, batched = _batched(x)
    dyb, _ = _batched(dy)
    dx, dw, db = kernels.conv1d_backward(
        xb, np.ascontiguousarray(w), np.ascontiguousarray(dyb))
    return (dx, dw, db) if batched else (dx[0], dw, db)


# --- relu -----------------------------------------------------------------

def relu(x):
    return np.maximum(x, 0)


def relu_backward(dy, x):
    """Mask dy where the input was <= 0 (derivative at 0 taken as 0)."""
    return dy * (x > 0)


# --- max pooling ------------------------------------------------------------

def maxpool1d(x, size=4, stride=4):
    """Returns (y, argmax). Ties go to the lowest index; the trailing
    remainder shorter than `size` is dropped."""
    xb, batched = _batched(x)
    if size > xb.shape[2]:
        raise PoolTooLong(f"pool size {size} longer than input {xb.shape[2]}")
    y, argmax = kernels.maxpool1d_forward(xb, size, stride)
    return (y, argmax) if batched else (y[0], argmax[0])


def maxpool1d_backward(dy, argmax, length):
    dyb, batched = _batched(dy)
    argb = argmax if argmax.ndim == 3 else argmax[None]
    dx = kernels.maxpool1d_backward(dyb, np.ascontiguousarray(argb), length)
    return dx if batched else dx[0]


# --- dense ------------------------------------------------------------------

def dense(x, w, b):
    """y = w @ x + b for a vector, or row-wise for a (B, n) batch."""
    x = np.asarray(x)
    if w.ndim != 2 or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"weights {w.shape} / bias {b.shape} malformed")
    if x.shape[-1] != w.shape[1]:
        raise ShapeMismatch(f"input width {x.shape[-1]} != weight fan-in {w.shape[1]}")
    return x @ w.T + b


def dense_backward(dy, x, w):
    dy = np.asarray(dy)
    x = np.asarray(x)
    if dy.ndim == 1:
        return dy @ w, np.outer(dy, x), dy.copy()
    return dy @ w, dy.T @ x, dy.sum(axis=0)


# --- dropout ----------------------------------------------------------------

def dropout(x, p, training, seed, step=0):
    """Inverted dropout. Returns (y, mask); mask is None when inactive.

    The mask depends only on (seed, step), so a training run replays
    exactly. Survivors are scaled by 1/(1-p); inference is the identity.
    """
    if not 0 <= p < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    rng = np.random.default_rng([seed, step])
    keep = (rng.random(x.shape) >= p).astype(x.dtype)
    mask = keep / (1.0 - p)
    return x * mask, mask


# --- softmax cross-entropy ----------------------------------------------------

def softmax_xent(logits, labels):
    """Mean cross-entropy and softmax probabilities.

    Accepts (C,) logits with an int label or (B, C) with (B,) labels. The
    loss is computed through log-sum-exp so extreme logits stay finite.
    """
    z = np.asarray(logits)
    single = z.ndim == 1
    if single:
        z = z[None]
        labels = np.asarray([labels])
    else:
        labels = np.asarray(labels)
    n, c = z.shape
    if c < 2:
        raise ShapeMismatch("need at least 2 classes")
    if labels.shape != (n,):
        raise ShapeMismatch(f"{n} rows of logits but labels shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelOutOfRange(f"labels must lie in [0, {c})")
    shifted = z - z.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    denom = expz.sum(axis=1, keepdims=True)
    probs = expz / denom
    log_denom = np.log(denom[:, 0])
    loss = float(np.mean(log_denom - shifted[np.arange(n), labels]))
    return loss, (probs[0] if single else probs)


def softmax_xent_backward(probs, labels):
    """d(mean loss)/dlogits = (probs - onehot) / batch_size."""
    p = np.asarray(probs)
    single = p.ndim == 1
    if single:
        p = p[None]
        labels = np.asarray([labels])
    else:
        labels = np.asarray(labels)
    d = p.copy()
    d[np.arange(d.shape[0]), labels] -= 1.0
    d /= d.shape[0]
    return d[0] if single else d


# --- layer classes ------------------------------------------------------------


class Conv1D:
    def __init__(self, in_channels, out_channels, kernel_size, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.w = np.zeros((out_channels, in_channels, kernel_size), dtype=dtype)
        self.b = np.zeros(out_channels, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def forward(self, x, training=False):
        y = conv1d(x, self.w, self.b)
        self._x = x if training else None
        return y

    def backward(self, dy):
        dx, self.dw, self.db = conv1d_backward(dy, self._x, self.w)
        return dx

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]


class ReLU:
    def __init__(self):
        self._x = None

    def forward(self, x, training=False):
        self._x = x if training else None
        return relu(x)

    def backward(self, dy):
        return relu_backward(dy, self._x)


class MaxPool1D:
    def __init__(self, size=4, stride=4):
        self.size = size
        self.stride = stride
        self._argmax = None
        self._length = None

    def forward(self, x, training=False):
        y, argmax = maxpool1d(x, self.size, self.stride)
        if training:
            self._argmax = argmax
            self._length = x.shape[-1]
        return y

    def backward(self, dy):
        return maxpool1d_backward(dy, self._argmax, self._length)


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Dense:
    def __init__(self, in_features, out_features, dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        self.w = np.zeros((out_features, in_features), dtype=dtype)
        self.b = np.zeros(out_features, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def forward(self, x, training=False):
        self._x = x if training else None
        return dense(x, self.w, self.b)

    def backward(self, dy):
        dx, self.dw, self.db = dense_backward(dy, self._x, self.w)
        return dx

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]


class Dropout:
    """Inverted dropout; the per-forward step counter keeps masks distinct
    within an epoch while staying reproducible from (seed, step)."""

    def __init__(self, p=0.0, seed=0):
        self.p = p
        self.seed = seed
        self.step = 0
        self._mask = None

    def forward(self, x, training=False):
        y, mask = dropout(x, self.p, training, self.seed, self.step)
        if training:
            self.step += 1
            self._mask = mask
        return y

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask
