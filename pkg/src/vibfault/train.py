"""Mini-batch Adam training with early stopping and checkpoint I/O."""

import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (BadMagic, EmptyDataset, NonFiniteGradient, NonFiniteLoss,
                     ShapeMismatch, TruncatedFile, VersionUnsupported)
from .model import ModelConfig, build_model
from .pipeline import SplitSpec, batches, split

CHECKPOINT_MAGIC = b"VFCK"
CHECKPOINT_VERSION = 1
_FLAG_ADAM = 0x01


@dataclass(frozen=True)
class EarlyStopConfig:
    enabled: bool = True
    patience: int = 5
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0 < self.val_fraction < 0.5:
            raise ValueError("val_fraction must be in (0, 0.5)")


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    early_stop: EarlyStopConfig = field(default_factory=EarlyStopConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1/beta2 must lie in [0, 1)")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def adam_step(params, grads, state, cfg):
    """One Adam update, in place.

    t += 1; m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2;
    theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params, grads and state must align")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatch(f"param {p.shape} vs grad {g.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteGradient(f"non-finite gradient for shape {g.shape}")
    state.t += 1
    t = state.t
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
    return params, state


@dataclass
class History:
    """Per-epoch metrics; best_epoch is 1-based and indexes the minimum
    recorded validation loss (the last epoch when none was recorded)."""

    epochs: list = field(default_factory=list)  # (epoch, tl, ta, vl, va)
    best_epoch: int = 0
    stopped_early: bool = False

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_loss,train_acc,val_loss,val_acc\n")
            for e, tl, ta, vl, va in self.epochs:
                fh.write(f"{e},{tl:.6f},{ta:.6f},{vl:.6f},{va:.6f}\n")

    @classmethod
    def from_csv(cls, path):
        hist = cls()
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "epoch,train_loss,train_acc,val_loss,val_acc":
                raise ValueError(f"unexpected history header: {header!r}")
            for line in fh:
                e, tl, ta, vl, va = line.strip().split(",")
                hist.epochs.append((int(e), float(tl), float(ta),
                                    float(vl), float(va)))
        vals = [(vl, e) for e, _, _, vl, _ in hist.epochs if np.isfinite(vl)]
        hist.best_epoch = min(vals)[1] if vals else (
            hist.epochs[-1][0] if hist.epochs else 0)
        return hist


def _evaluate(model, data, labels, batch_size=256):
    """Mean loss and accuracy in inference mode."""
    total_loss = 0.0
    correct = 0
    n = data.shape[0]
    for start in range(0, n, batch_size):
        xb = data[start:start + batch_size]
        yb = labels[start:start + batch_size]
        logits = model.forward(xb, training=False)
        loss, _ = model.loss(logits, yb)
        total_loss += loss * xb.shape[0]
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total_loss / n, correct / n


def fit(model, train_set, config, val_eval=None):
    """Train with Adam and mean-batch cross-entropy.

    When early stopping is enabled, a stratified val_fraction slice is carved
    from train_set (seeded) before training; training stops once validation
    loss has failed to improve strictly for `patience` consecutive epochs and
    the best-epoch parameters are restored.

    Args:
        val_eval: testing seam; a callable (model, epoch) -> (loss, acc) that
            replaces validation evaluation (no carve-out happens then).

    Returns:
        (model, History)
    """
    if train_set.n_segments == 0:
        raise EmptyDataset("training set holds no segments")

    es = config.early_stop
    have_val = es.enabled or val_eval is not None
    if val_eval is None and es.enabled:
        core, val = split(train_set, SplitSpec(1.0 - es.val_fraction,
                                               "random_stratified", config.seed))
    else:
        core, val = train_set, None

    model.dropout.seed = config.seed
    model.dropout.step = 0

    history = History()
    best_val = np.inf
    best_snapshot = None
    bad_epochs = 0
    state = AdamState(model.parameters())

    for epoch in range(1, config.max_epochs + 1):
        epoch_loss = 0.0
        correct = 0
        for batch_no, idx in enumerate(batches(core, config.batch_size,
                                               config.seed, epoch)):
            xb = core.data[idx]
            yb = core.labels[idx]
            logits = model.forward(xb, training=True)
            loss, probs = model.loss(logits, yb)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss {loss} at epoch {epoch}, batch {batch_no}",
                    epoch=epoch, batch=batch_no, value=loss)
            model.backward(model.loss_backward(probs, yb))
            adam_step(model.parameters(), model.gradients(), state, config)
            epoch_loss += loss * idx.size
            correct += int((logits.argmax(axis=1) == yb).sum())
        train_loss = epoch_loss / core.n_segments
        train_acc = correct / core.n_segments

        if val_eval is not None:
            val_loss, val_acc = val_eval(model, epoch)
        elif val is not None:
            val_loss, val_acc = _evaluate(model, val.data, val.labels)
        else:
            val_loss, val_acc = float("nan"), float("nan")
        history.epochs.append((epoch, train_loss, train_acc, val_loss, val_acc))

        if have_val:
            if val_loss < best_val:
                best_val = val_loss
                history.best_epoch = epoch
                best_snapshot = model.snapshot()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if es.enabled and bad_epochs >= es.patience:
                    history.stopped_early = True
                    break

    if es.enabled and best_snapshot is not None:
        model.restore(best_snapshot)
    if not have_val:
        history.best_epoch = history.epochs[-1][0]
    return model, history


# --- checkpoint I/O -----------------------------------------------------------

def _header_text(config):
    lines = [
        f"window_len={config.window_len}",
        f"class_count={config.class_count}",
        f"dropout_p={config.dropout_p!r}",
        f"conv1_filters={config.conv1_filters}",
        f"conv1_kernel={config.conv1_kernel}",
        f"conv2_filters={config.conv2_filters}",
        f"conv2_kernel={config.conv2_kernel}",
        f"pool_size={config.pool_size}",
        f"pool_stride={config.pool_stride}",
        f"dense_hidden={config.dense_hidden}",
        "layers=conv1d({0}x1x{1});conv1d({2}x{0}x{3});dense({4}x{5});dense({6}x{4})".format(
            config.conv1_filters, config.conv1_kernel, config.conv2_filters,
            config.conv2_kernel, config.dense_hidden, config.flatten_dim,
            config.class_count),
    ]
    return "\n".join(lines) + "\n"


def save_checkpoint(path, model, optimizer_state=None):
    """Write model parameters (and optionally Adam state) to `path`.

    Layout: magic, version u32, header length u32, UTF-8 key=value header,
    one flags byte, per-layer float32 little-endian parameter buffers in
    stack order (weights then biases), then the Adam step counter u64 and
    m/v buffers when the flags byte says so.
    """
    header = _header_text(model.config).encode("utf-8")
    flags = _FLAG_ADAM if optimizer_state is not None else 0
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(struct.pack("<B", flags))
        for p in model.parameters():
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
        if optimizer_state is not None:
            fh.write(struct.pack("<Q", optimizer_state.t))
            for buf in optimizer_state.m + optimizer_state.v:
                fh.write(np.ascontiguousarray(buf, dtype="<f4").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"{what}: expected {n} bytes, got {len(buf)}")
    return buf


def _config_from_header(text):
    fields = {}
    for line in text.strip().splitlines():
        key, _, value = line.partition("=")
        fields[key] = value
    try:
        return ModelConfig(
            window_len=int(fields["window_len"]),
            class_count=int(fields["class_count"]),
            conv1_filters=int(fields["conv1_filters"]),
            conv1_kernel=int(fields["conv1_kernel"]),
            conv2_filters=int(fields["conv2_filters"]),
            conv2_kernel=int(fields["conv2_kernel"]),
            pool_size=int(fields["pool_size"]),
            pool_stride=int(fields["pool_stride"]),
            dense_hidden=int(fields["dense_hidden"]),
            dropout_p=float(fields["dropout_p"]),
        )
    except KeyError as exc:
        raise TruncatedFile(f"checkpoint header missing {exc}") from exc


def load_checkpoint(path, expected_config=None):
    """Load a checkpoint; returns (model, AdamState or None).

    When expected_config is given, every layer shape must match the stored
    one; a mismatch raises ShapeMismatch naming the offending layer instead
    of silently reinterpreting buffers.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise BadMagic(f"expected {CHECKPOINT_MAGIC!r}, got {magic!r}")
        version, header_len = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != CHECKPOINT_VERSION:
            raise VersionUnsupported(f"checkpoint version {version}")
        header = _read_exact(fh, header_len, "header text").decode("utf-8")
        config = _config_from_header(header)
        if expected_config is not None:
            stored = build_model(config)
            wanted = build_model(expected_config)
            for name, sp, wp in zip(stored.param_names(), stored.parameters(),
                                    wanted.parameters()):
                if sp.shape != wp.shape:
                    raise ShapeMismatch(
                        f"{name}: checkpoint has {sp.shape}, "
                        f"expected {wp.shape}")
        model = build_model(config)
        flags = struct.unpack("<B", _read_exact(fh, 1, "flags"))[0]
        for name, p in zip(model.param_names(), model.parameters()):
            raw = _read_exact(fh, 4 * p.size, name)
            np.copyto(p, np.frombuffer(raw, dtype="<f4").reshape(p.shape))
        state = None
        if flags & _FLAG_ADAM:
            state = AdamState(model.parameters())
            state.t = struct.unpack("<Q", _read_exact(fh, 8, "adam step"))[0]
            for tag, bufs in (("adam m", state.m), ("adam v", state.v)):
                for buf in bufs:
                    raw = _read_exact(fh, 4 * buf.size, tag)
                    np.copyto(buf, np.frombuffer(raw, dtype="<f4").reshape(buf.shape))
    return model, state


def format_run_report(model, history, config, wall_seconds, backend):
    """Plain-text summary written next to the checkpoint."""
    lines = [
        f"window_len={model.config.window_len}",
        f"class_count={model.config.class_count}",
        f"flatten_dim={model.flatten_dim}",
        f"param_count={model.param_count}",
        f"backend={backend}",
        f"max_epochs={config.max_epochs}",
        f"batch_size={config.batch_size}",
        f"learning_rate={config.learning_rate!r}",
        f"early_stop={config.early_stop.enabled}",
        f"epochs_run={len(history.epochs)}",
        f"best_epoch={history.best_epoch}",
        f"stopped_early={history.stopped_early}",
        f"wall_seconds={wall_seconds:.2f}",
    ]
    return "\n".join(lines) + "\n"


def timed_fit(model, train_set, config, val_eval=None):
    """fit() plus wall-clock measurement; returns (model, history, seconds)."""
    start = time.perf_counter()
    model, history = fit(model, train_set, config, val_eval=val_eval)
    return model, history, time.perf_counter() - start
