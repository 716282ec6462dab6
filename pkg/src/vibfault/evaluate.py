"""Prediction, confusion matrices and penultimate-layer feature extraction."""

from dataclasses import dataclass

import numpy as np

from .errors import LabelOutOfRange, LengthMismatch, UndefinedOnEmpty
from .pipeline import SegmentSet


@dataclass
class ConfusionMatrix:
    counts: np.ndarray      # (C, C) int64, rows = true, columns = predicted
    class_names: list

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class Metrics:
    overall_accuracy: float
    per_class_recall: np.ndarray
    macro_recall: float


def predict(model, segset, batch_size=256):
    """Argmax class per segment, inference mode (ties to the lowest index)."""
    data = segset.data if isinstance(segset, SegmentSet) else np.asarray(segset)
    out = np.empty(data.shape[0], dtype=np.int64)
    for start in range(0, data.shape[0], batch_size):
        logits = model.forward(data[start:start + batch_size], training=False)
        out[start:start + batch_size] = logits.argmax(axis=1)
    return out


def confusion(true_labels, predicted_labels, class_count, class_names=None):
    """Count true-vs-predicted pairs; returns (ConfusionMatrix, Metrics)."""
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape or true.ndim != 1:
        raise LengthMismatch(f"true {true.shape} vs predicted {pred.shape}")
    if true.size == 0:
        raise UndefinedOnEmpty("accuracy undefined for empty label sequences")
    for name, arr in (("true", true), ("predicted", pred)):
        if arr.min() < 0 or arr.max() >= class_count:
            raise LabelOutOfRange(f"{name} labels must lie in [0, {class_count})")
    counts = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    if class_names is None:
        class_names = [str(i) for i in range(class_count)]
    supports = counts.sum(axis=1)
    diag = np.diag(counts)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.where(supports > 0, diag / supports, np.nan)
    metrics = Metrics(
        overall_accuracy=int(diag.sum()) / int(counts.sum()),
        per_class_recall=recall,
        macro_recall=float(np.nanmean(recall)),
    )
    return ConfusionMatrix(counts, list(class_names)), metrics


def extract_features(model, segset, batch_size=256):
    """Hidden-dense activations (N, hidden), inference mode."""
    data = segset.data if isinstance(segset, SegmentSet) else np.asarray(segset)
    chunks = [model.forward_features(data[s:s + batch_size])
              for s in range(0, data.shape[0], batch_size)]
    return np.vstack(chunks)


def record_vote_accuracy(pred, true_labels, record_ids):
    """Record-level accuracy by majority vote over each record's windows.

    Ties go to the lowest class label. Each record's true label is taken from
    its windows (which share one label by construction).
    """
    pred = np.asarray(pred)
    true_labels = np.asarray(true_labels)
    record_ids = np.asarray(record_ids)
    correct = 0
    records = np.unique(record_ids)
    for rec in records:
        rows = record_ids == rec
        votes = np.bincount(pred[rows])
        if votes.argmax() == true_labels[rows][0]:
            correct += 1
    return correct / records.size


# --- artifact I/O -------------------------------------------------------------

def write_confusion_csv(cm, path):
    """Header row of class names, then one row of counts per true class."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cm.class_names) + "\n")
        for row in cm.counts:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def read_confusion_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        names = fh.readline().rstrip("\n").split(",")
        rows = [[int(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    counts = np.array(rows, dtype=np.int64)
    if counts.shape != (len(names), len(names)):
        raise ValueError(f"expected {len(names)}x{len(names)} counts, got {counts.shape}")
    return ConfusionMatrix(counts, names)


def write_metrics_report(metrics, class_names, path):
    """Flat key=value metric report."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"overall_accuracy={metrics.overall_accuracy:.6f}\n")
        for name, r in zip(class_names, metrics.per_class_recall):
            fh.write(f"recall.{name}={r:.6f}\n")
        fh.write(f"macro_recall={metrics.macro_recall:.6f}\n")


def read_metrics_report(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, _, value = line.strip().partition("=")
            if key:
                out[key] = float(value)
    return out
