"""Bearing fault diagnosis from raw vibration signals.

Pipeline: MAT/CSV/synthetic ingestion -> sliding-window segmentation ->
compact 1-D CNN trained with Adam and early stopping -> confusion-matrix
evaluation and 2-D feature embeddings.

All randomness flows through numpy's PCG64 generator (`numpy.random
.default_rng`), so seeds reproduce runs bit-for-bit on a given platform.
"""

__version__ = "0.1.0"

from .catalog import Catalog, catalog_cwru, catalog_pu, label_record
from .kernels import BACKEND
from .model import Model, ModelConfig, build_model, init_params
from .pipeline import (SegmentSet, SplitSpec, batches, build_segment_set,
                       load_cache, normalize_segment, save_cache, segment,
                       split)
from .signals import Signal, load_csv, load_record, read_manifest
from .synth import BearingGeometry, SynthConfig, fault_frequencies, synth_signal
from .train import (AdamState, EarlyStopConfig, History, TrainConfig,
                    adam_step, fit, load_checkpoint, save_checkpoint)
from .evaluate import ConfusionMatrix, Metrics, confusion, extract_features, predict
from .tsne import TsneConfig, perplexity_search, silhouette, tsne
from .mat5 import parse_mat5

__all__ = [
    "BACKEND", "AdamState", "BearingGeometry", "Catalog", "ConfusionMatrix",
    "EarlyStopConfig", "History", "Metrics", "Model", "ModelConfig",
    "SegmentSet", "Signal", "SplitSpec", "SynthConfig", "TrainConfig",
    "TsneConfig", "adam_step", "batches", "build_model", "build_segment_set",
    "catalog_cwru", "catalog_pu", "confusion", "extract_features",
    "fault_frequencies", "fit", "init_params", "label_record", "load_cache",
    "load_checkpoint", "load_csv", "load_record", "normalize_segment",
    "parse_mat5", "perplexity_search", "predict", "read_manifest",
    "save_cache", "save_checkpoint", "segment", "silhouette", "split",
    "synth_signal", "tsne",
]
