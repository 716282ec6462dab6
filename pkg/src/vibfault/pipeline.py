"""Sliding-window segmentation, train/test splitting and batching.

Segments are stored float32 row-major (one window per row). Windows within a
record always appear in offset order, which the block split mode relies on.
"""

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (BadMagic, ClassTooSmall, TruncatedFile,
                     VersionUnsupported, WindowTooLong, ZeroStride)
from .signals import Signal

CACHE_MAGIC = b"VFSG"
CACHE_VERSION = 1

SPLIT_MODES = ("random_stratified", "block_per_record")


@dataclass
class SegmentSet:
    """Fixed-length windows with labels and record-of-origin indices."""

    data: np.ndarray        # (N, W) float32
    labels: np.ndarray      # (N,) int64 in [0, class_count)
    record_ids: np.ndarray  # (N,) int64
    window_len: int
    stride: int
    class_count: int

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.record_ids = np.asarray(self.record_ids, dtype=np.int64)
        n = self.data.shape[0]
        if self.data.ndim != 2 or self.data.shape[1] != self.window_len:
            raise ValueError(f"data must be (N, {self.window_len}), got {self.data.shape}")
        if self.labels.shape != (n,) or self.record_ids.shape != (n,):
            raise ValueError("labels and record_ids must have one entry per row")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")

    @property
    def n_segments(self):
        return self.data.shape[0]

    def per_class_counts(self):
        return np.bincount(self.labels, minlength=self.class_count)

    def take(self, indices):
        """New SegmentSet holding the given rows (copy)."""
        idx = np.asarray(indices, dtype=np.int64)
        return SegmentSet(self.data[idx], self.labels[idx], self.record_ids[idx],
                          self.window_len, self.stride, self.class_count)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    mode: str = "random_stratified"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.mode not in SPLIT_MODES:
            raise ValueError(f"mode must be one of {SPLIT_MODES}")


def segment(signal, window, stride):
    """Slice a signal into overlapping fixed-length windows.

    Windows start at offsets 0, stride, 2*stride, ...; trailing samples that
    do not fill a window are dropped. Returns an (n, window) array with
    n = floor((L - window) / stride) + 1.
    """
    samples = signal.samples if isinstance(signal, Signal) else np.asarray(signal)
    samples = samples.ravel()
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    if stride < 1:
        raise ZeroStride(f"stride must be at least 1, got {stride}")
    if window > samples.size:
        raise WindowTooLong(
            f"window {window} exceeds signal length {samples.size}")
    return sliding_window_view(samples, window)[::stride].copy()


def normalize_segment(window, enabled=True):
    """Per-window z-score: subtract mean, divide by (std + 1e-8).

    Works on a single window or an (N, W) matrix of windows; identity when
    disabled.
    """
    if not enabled:
        return window
    w = np.asarray(window)
    mean = w.mean(axis=-1, keepdims=True)
    std = w.std(axis=-1, keepdims=True)
    return (w - mean) / (std + 1e-8)


def build_segment_set(signals, window, stride, class_count, normalize=True):
    """Segment labeled signals into one SegmentSet.

    Signals are processed in order; record_ids follow that order, so windows
    of each record stay contiguous and offset-ordered.
    """
    blocks, labels, record_ids = [], [], []
    for rec_id, sig in enumerate(signals):
        if sig.class_label is None:
            raise ValueError(f"signal {sig.source_id!r} has no class label")
        if not 0 <= sig.class_label < class_count:
            raise ValueError(
                f"signal {sig.source_id!r}: label {sig.class_label} outside "
                f"[0, {class_count})")
        windows = segment(sig, window, stride)
        windows = normalize_segment(windows, enabled=normalize)
        blocks.append(windows.astype(np.float32))
        labels.append(np.full(len(windows), sig.class_label, dtype=np.int64))
        record_ids.append(np.full(len(windows), rec_id, dtype=np.int64))
    if not blocks:
        raise ValueError("no signals given")
    return SegmentSet(np.vstack(blocks), np.concatenate(labels),
                      np.concatenate(record_ids), window, stride, class_count)


def split(segset, spec):
    """Partition a SegmentSet into train and test sets.

    random_stratified: per class, shuffle with the seed and send
    ceil(train_fraction * n_c) windows to train.

    block_per_record: per record, the first floor(train_fraction * n_r)
    windows (offset order) go to train; test keeps only windows whose start
    offset is at least max(train offset) + window_len, so train and test
    never share raw samples from the same record.
    """
    counts = segset.per_class_counts()
    small = np.nonzero(counts < 2)[0]
    if small.size:
        raise ClassTooSmall(
            f"classes {small.tolist()} have fewer than 2 segments "
            f"(counts {counts[small].tolist()})")

    if spec.mode == "random_stratified":
        rng = np.random.default_rng(spec.seed)
        train_idx, test_idx = [], []
        for c in range(segset.class_count):
            idx = np.nonzero(segset.labels == c)[0]
            perm = rng.permutation(idx)
            k = int(np.ceil(spec.train_fraction * idx.size))
            train_idx.append(perm[:k])
            test_idx.append(perm[k:])
        train_idx = np.sort(np.concatenate(train_idx))
        test_idx = np.sort(np.concatenate(test_idx))
    else:  # block_per_record
        w, s = segset.window_len, segset.stride
        if s < 1:
            raise ZeroStride(
                "block_per_record split needs the segment stride; "
                "pass stride= when loading a cache")
        train_parts, test_parts = [], []
        for rec in np.unique(segset.record_ids):
            rows = np.nonzero(segset.record_ids == rec)[0]  # offset order
            n_r = rows.size
            k = int(np.floor(spec.train_fraction * n_r))
            if k == 0:
                test_parts.append(rows)
                continue
            train_parts.append(rows[:k])
            # positions k.. are test candidates; drop those overlapping the
            # last train window (offsets below (k-1)*s + w).
            pos_min = (k - 1) + int(np.ceil(w / s))
            test_parts.append(rows[max(pos_min, k):])
        train_idx = np.sort(np.concatenate(train_parts)) if train_parts else \
            np.empty(0, dtype=np.int64)
        test_idx = np.sort(np.concatenate(test_parts)) if test_parts else \
            np.empty(0, dtype=np.int64)

    return segset.take(train_idx), segset.take(test_idx)


def batches(segset, batch_size, seed, epoch):
    """Deterministic shuffled mini-batch index slices for one epoch.

    The permutation depends only on (seed, epoch); the final partial batch
    is retained.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    n = segset.n_segments if isinstance(segset, SegmentSet) else int(segset)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def save_cache(segset, path):
    """Write a SegmentSet in the binary segment-cache format (little-endian:
    magic, version u32, N u64, W u64, C u32, float32 data, u32 labels,
    u32 record_ids)."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQQI", CACHE_VERSION, segset.n_segments,
                             segset.window_len, segset.class_count))
        fh.write(np.ascontiguousarray(segset.data, dtype="<f4").tobytes())
        fh.write(segset.labels.astype("<u4").tobytes())
        fh.write(segset.record_ids.astype("<u4").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"{what}: expected {n} bytes, got {len(buf)}")
    return buf


def load_cache(path, stride=0):
    """Read a segment cache written by save_cache.

    The stride is not stored in the file; pass it when block-split bookkeeping
    is needed downstream.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CACHE_MAGIC:
            raise BadMagic(f"expected {CACHE_MAGIC!r}, got {magic!r}")
        version, n, w, c = struct.unpack("<IQQI", _read_exact(fh, 24, "header"))
        if version != CACHE_VERSION:
            raise VersionUnsupported(f"segment cache version {version}")
        data = np.frombuffer(
            _read_exact(fh, 4 * n * w, "segment data"), dtype="<f4").reshape(n, w)
        labels = np.frombuffer(
            _read_exact(fh, 4 * n, "labels"), dtype="<u4").astype(np.int64)
        record_ids = np.frombuffer(
            _read_exact(fh, 4 * n, "record ids"), dtype="<u4").astype(np.int64)
    return SegmentSet(data.copy(), labels, record_ids,
                      window_len=int(w), stride=int(stride), class_count=int(c))
