"""Model assembly: the compact two-conv 1-D CNN and its forward/backward.

Stack: Conv(64, k=100) -> ReLU -> Conv(32, k=50) -> ReLU -> MaxPool(4, 4)
-> Flatten -> Dense(hidden=100) -> ReLU -> Dropout(p) -> Dense(classes),
with a softmax cross-entropy head applied by the caller. Valid convolutions
with stride 1 throughout; for the 500-sample window this flattens to a
2816-dimensional vector and totals 392,010 parameters at 14 classes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteActivation, ShapeMismatch, ShapeUnderflow
from .layers import (Conv1D, Dense, Dropout, Flatten, MaxPool1D, ReLU,
                     softmax_xent, softmax_xent_backward)


@dataclass(frozen=True)
class ModelConfig:
    window_len: int
    class_count: int
    conv1_filters: int = 64
    conv1_kernel: int = 100
    conv2_filters: int = 32
    conv2_kernel: int = 50
    pool_size: int = 4
    pool_stride: int = 4
    dense_hidden: int = 100
    dropout_p: float = 0.0

    def __post_init__(self):
        if self.class_count < 2:
            raise ValueError("need at least 2 classes")
        if not 0 <= self.dropout_p < 1:
            raise ValueError("dropout_p must be in [0, 1)")
        for name in ("window_len", "conv1_filters", "conv1_kernel",
                     "conv2_filters", "conv2_kernel", "pool_size",
                     "pool_stride", "dense_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def conv2_out_len(self):
        return self.window_len - self.conv1_kernel - self.conv2_kernel + 2

    @property
    def pool_out_len(self):
        return (self.conv2_out_len - self.pool_size) // self.pool_stride + 1

    @property
    def flatten_dim(self):
        return self.conv2_filters * self.pool_out_len

    def validate_shapes(self):
        if self.conv2_out_len < self.pool_size:
            raise ShapeUnderflow(
                f"window {self.window_len} leaves {self.conv2_out_len} samples "
                f"after the conv stack; pooling needs at least {self.pool_size}")


class Model:
    """Layer stack with parameter bookkeeping and cached activations."""

    def __init__(self, config, dtype=np.float32):
        config.validate_shapes()
        self.config = config
        self.dtype = np.dtype(dtype)
        self.conv1 = Conv1D(1, config.conv1_filters, config.conv1_kernel, dtype)
        self.conv2 = Conv1D(config.conv1_filters, config.conv2_filters,
                            config.conv2_kernel, dtype)
        self.pool = MaxPool1D(config.pool_size, config.pool_stride)
        self.dense1 = Dense(config.flatten_dim, config.dense_hidden, dtype)
        self.dense2 = Dense(config.dense_hidden, config.class_count, dtype)
        self.dropout = Dropout(config.dropout_p)
        self.hidden_relu = ReLU()
        self.layers = [
            self.conv1, ReLU(), self.conv2, ReLU(), self.pool, Flatten(),
            self.dense1, self.hidden_relu, self.dropout, self.dense2,
        ]

    @property
    def flatten_dim(self):
        return self.config.flatten_dim

    @property
    def param_count(self):
        return sum(p.size for p in self.parameters())

    def parameters(self):
        """Parameter arrays in stack order (weights before biases)."""
        out = []
        for layer in self.layers:
            if hasattr(layer, "params"):
                out.extend(layer.params())
        return out

    def gradients(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "grads"):
                out.extend(layer.grads())
        return out

    def param_names(self):
        names = []
        for layer, tag in ((self.conv1, "conv1"), (self.conv2, "conv2"),
                           (self.dense1, "dense1"), (self.dense2, "dense2")):
            names.extend([f"{tag}.w", f"{tag}.b"])
        return names

    def _prepare(self, batch):
        x = np.asarray(batch, dtype=self.dtype)
        if x.ndim == 2:
            x = x[:, None, :]
        if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != self.config.window_len:
            raise ShapeMismatch(
                f"batch shape {np.asarray(batch).shape} does not match "
                f"(B, 1, {self.config.window_len})")
        return np.ascontiguousarray(x)

    def forward(self, batch, training=False):
        """Logits (B, class_count) for a (B, W) or (B, 1, W) batch."""
        x = self._prepare(batch)
        for layer in self.layers:
            x = layer.forward(x, training=training)
        if not np.isfinite(x).all():
            raise NonFiniteActivation("non-finite logits in forward pass")
        return x

    def backward(self, dlogits):
        """Propagate the loss gradient; fills every layer's dw/db."""
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def loss(self, logits, labels):
        return softmax_xent(logits, labels)

    def loss_backward(self, probs, labels):
        return softmax_xent_backward(probs, labels)

    def forward_features(self, batch):
        """Hidden-dense activations (post-ReLU, pre-dropout), inference mode."""
        x = self._prepare(batch)
        for layer in self.layers:
            x = layer.forward(x, training=False)
            if layer is self.hidden_relu:
                return x
        raise RuntimeError("hidden layer missing from stack")

    def snapshot(self):
        return [p.copy() for p in self.parameters()]

    def restore(self, snapshot):
        for p, s in zip(self.parameters(), snapshot):
            np.copyto(p, s)


def build_model(config, dtype=np.float32):
    """Assemble the layer stack with zero-initialized parameters."""
    return Model(config, dtype=dtype)


def init_params(model, seed):
    """He-normal weights (std = sqrt(2 / fan_in)), zero biases.

    Weights are drawn in stack order from one PCG64 stream, so a seed fully
    determines the initial parameters.
    """
    rng = np.random.default_rng(seed)
    for layer in (model.conv1, model.conv2, model.dense1, model.dense2):
        w = layer.w
        fan_in = int(np.prod(w.shape[1:]))
        w[...] = (rng.standard_normal(w.shape) * np.sqrt(2.0 / fan_in)).astype(w.dtype)
        layer.b[...] = 0
    return model
