"""Command-line interface: ingest, train, eval, embed, ablate, report.

Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numeric
failure, 5 shape mismatch.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from . import errors, kernels
from .catalog import catalog_cwru, catalog_pu, label_record
from .config import load_run_config
from .evaluate import (confusion, extract_features, predict,
                       record_vote_accuracy, write_confusion_csv,
                       write_metrics_report)
from .model import build_model, init_params
from .pipeline import build_segment_set, load_cache, save_cache, split
from .signals import load_csv, load_record, read_manifest
from .synth import SynthConfig, synth_signal
from .train import (format_run_report, load_checkpoint, save_checkpoint,
                    timed_fit)
from .tsne import embed_features, silhouette, write_embedding_csv, write_kl_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_SHAPE = 5

_SHAPE_ERRORS = (errors.ShapeMismatch, errors.ShapeUnderflow,
                 errors.KernelTooLong, errors.PoolTooLong,
                 errors.LabelOutOfRange)
_NUMERIC_ERRORS = (errors.NonFiniteLoss, errors.NonFiniteGradient,
                   errors.NonFiniteActivation)


def _say(quiet, *parts):
    if not quiet:
        print(*parts)


def _class_names(cfg):
    if cfg.dataset == "synthetic":
        return list(cfg.synth_kinds)
    return _catalog_for(cfg).class_names()


def _catalog_for(cfg):
    if cfg.dataset == "pu":
        return catalog_pu()
    if cfg.dataset == "cwru":
        return catalog_cwru()
    return catalog_pu() if cfg.catalog == "pu" else catalog_cwru()


def _synth_signals(cfg):
    """One long record per fault kind, sized for windows_per_class windows."""
    n_samples = (cfg.synth_windows_per_class - 1) * cfg.stride + cfg.window
    duration = n_samples / cfg.sample_rate_hz
    signals = []
    for idx, kind in enumerate(cfg.synth_kinds):
        sig = synth_signal(SynthConfig(
            fault_kind=kind,
            sample_rate_hz=cfg.sample_rate_hz,
            duration_s=duration,
            shaft_rpm=cfg.synth_rpm,
            impulse_amplitude=cfg.synth_impulse_amplitude,
            resonance_hz=cfg.synth_resonance_hz,
            decay_rate=cfg.synth_decay_rate,
            noise_std=cfg.synth_noise_std,
            seed=cfg.synth_seed + idx,
        ))
        sig.class_label = idx
        signals.append(sig)
    return signals


def _manifest_signals(cfg):
    catalog = _catalog_for(cfg)
    signals = []
    for record_name, file_path in read_manifest(cfg.manifest):
        label = label_record(catalog, record_name)
        path = Path(file_path)
        if not path.exists():
            raise errors.VibfaultError(f"record {record_name!r}: missing file {path}")
        if cfg.dataset == "csv-manifest" or path.suffix.lower() == ".csv":
            sig = load_csv(path, cfg.sample_rate_hz, source_id=record_name)
        else:
            sig = load_record(path, cfg.channel_pattern, cfg.sample_rate_hz,
                              source_id=record_name)
        sig.class_label = label
        signals.append(sig)
    return signals


def _load_dataset(cfg):
    """Returns (full SegmentSet, class names)."""
    if cfg.dataset == "synthetic":
        signals = _synth_signals(cfg)
        class_count = len(cfg.synth_kinds)
    else:
        signals = _manifest_signals(cfg)
        class_count = _catalog_for(cfg).class_count
    segset = build_segment_set(signals, cfg.window, cfg.stride,
                               class_count, normalize=cfg.normalize)
    return segset, _class_names(cfg)


def _ingest(cfg, quiet):
    """Build, split and cache the segment sets; returns (train, test, names)."""
    segset, names = _load_dataset(cfg)
    train_set, test_set = split(segset, cfg.split)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    save_cache(train_set, out / "train.vfsg")
    save_cache(test_set, out / "test.vfsg")
    _say(quiet, f"segments: {segset.n_segments} total, "
                f"{train_set.n_segments} train / {test_set.n_segments} test "
                f"(window {cfg.window}, stride {cfg.stride})")
    train_counts = train_set.per_class_counts()
    test_counts = test_set.per_class_counts()
    for c, name in enumerate(names):
        _say(quiet, f"  class {c} ({name}): {train_counts[c]} train / "
                    f"{test_counts[c]} test")
    return train_set, test_set, names


def cmd_ingest(cfg, args):
    _ingest(cfg, args.quiet)
    return EXIT_OK


def _train(cfg, train_set, quiet):
    model_cfg = cfg.model_config(train_set.class_count)
    model = init_params(build_model(model_cfg), cfg.train.seed)
    _say(quiet, f"model: {model.param_count} parameters, "
                f"flatten dim {model.flatten_dim}, backend {kernels.BACKEND}")
    model, history, seconds = timed_fit(model, train_set, cfg.train)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.vfck", model)
    history.to_csv(out / "history.csv")
    report = format_run_report(model, history, cfg.train, seconds, kernels.BACKEND)
    (out / "train_report.txt").write_text(report, encoding="utf-8")
    _say(quiet, f"trained {len(history.epochs)} epochs in {seconds:.1f}s "
                f"(best epoch {history.best_epoch}"
                f"{', stopped early' if history.stopped_early else ''})")
    return model, history


def cmd_train(cfg, args):
    train_path = Path(cfg.output) / "train.vfsg"
    if not train_path.exists():
        raise errors.VibfaultError(
            f"segment cache not found: {train_path} (run `ingest` first)")
    train_set = load_cache(train_path, stride=cfg.stride)
    _train(cfg, train_set, args.quiet)
    return EXIT_OK


def _eval(cfg, model, test_set, names, quiet, per_record_vote=False):
    pred = predict(model, test_set)
    cm, metrics = confusion(test_set.labels, pred, test_set.class_count, names)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_confusion_csv(cm, out / "confusion.csv")
    write_metrics_report(metrics, names, out / "metrics.txt")
    print(f"overall_accuracy={metrics.overall_accuracy:.6f}")
    if per_record_vote:
        acc = record_vote_accuracy(pred, test_set.labels, test_set.record_ids)
        print(f"record_vote_accuracy={acc:.6f}")
    return metrics


def cmd_eval(cfg, args):
    out = Path(cfg.output)
    ckpt_path = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.vfck"
    cache_path = Path(args.cache) if args.cache else out / "test.vfsg"
    for p in (ckpt_path, cache_path):
        if not p.exists():
            raise errors.VibfaultError(f"missing artifact: {p}")
    test_set = load_cache(cache_path, stride=cfg.stride)
    model, _ = load_checkpoint(ckpt_path,
                               expected_config=cfg.model_config(test_set.class_count))
    if model.config.window_len != test_set.window_len:
        raise errors.ShapeMismatch(
            f"checkpoint window {model.config.window_len} != "
            f"cache window {test_set.window_len}")
    _eval(cfg, model, test_set, _class_names(cfg), args.quiet,
          per_record_vote=args.per_record_vote)
    return EXIT_OK


def _embed(cfg, model, segset, names, quiet):
    features = extract_features(model, segset)
    indices, coords, kl_trace = embed_features(features, segset.labels, cfg.tsne)
    score = silhouette(coords, segset.labels[indices])
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_embedding_csv(out / "embedding.csv", indices, segset.labels, names, coords)
    write_kl_csv(out / "kl_trace.csv", kl_trace)
    subsampled = indices.size < segset.n_segments
    report = (f"points={indices.size}\n"
              f"subsampled={subsampled}\n"
              f"silhouette={score:.6f}\n"
              f"final_kl={kl_trace[-1]:.6f}\n")
    (out / "embed_report.txt").write_text(report, encoding="utf-8")
    _say(quiet, f"embedded {indices.size} points"
                f"{' (stratified subsample)' if subsampled else ''}, "
                f"silhouette {score:.4f}")
    return score


def cmd_embed(cfg, args):
    out = Path(cfg.output)
    ckpt_path = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.vfck"
    cache_path = Path(args.cache) if args.cache else out / "test.vfsg"
    for p in (ckpt_path, cache_path):
        if not p.exists():
            raise errors.VibfaultError(f"missing artifact: {p}")
    segset = load_cache(cache_path, stride=cfg.stride)
    model, _ = load_checkpoint(ckpt_path,
                               expected_config=cfg.model_config(segset.class_count))
    _embed(cfg, model, segset, _class_names(cfg), args.quiet)
    return EXIT_OK


def _parse_cell(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise errors.ConfigError(
            f"cell must be WINDOW:STRIDE:on|off, got {text!r}")
    window, stride = int(parts[0]), int(parts[1])
    flag = parts[2].strip().lower()
    if flag not in ("on", "off"):
        raise errors.ConfigError(f"early-stop flag must be on or off, got {parts[2]!r}")
    return window, stride, flag == "on"


def cmd_ablate(cfg, args):
    if not args.cell:
        print("ablate: no grid cells given (use --cell WINDOW:STRIDE:on|off)",
              file=sys.stderr)
        return EXIT_CONFIG
    cells = [_parse_cell(c) for c in args.cell]
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for window, stride, early in cells:
        cell_cfg = dataclasses.replace(
            cfg, window=window, stride=stride,
            train=dataclasses.replace(
                cfg.train,
                early_stop=dataclasses.replace(cfg.train.early_stop, enabled=early)))
        tag = f"{window}:{stride}:{'on' if early else 'off'}"
        try:
            segset, names = _load_dataset(cell_cfg)
            train_set, test_set = split(segset, cell_cfg.split)
            model_cfg = cell_cfg.model_config(train_set.class_count)
            model = init_params(build_model(model_cfg), cell_cfg.train.seed)
            model, _, _ = timed_fit(model, train_set, cell_cfg.train)
            pred = predict(model, test_set)
            _, metrics = confusion(test_set.labels, pred, test_set.class_count, names)
            result = f"{metrics.overall_accuracy:.6f}"
            _say(args.quiet, f"cell {tag}: accuracy {result}")
        except errors.VibfaultError as exc:
            result = f"error:{type(exc).__name__}"
            _say(args.quiet, f"cell {tag}: {result} ({exc})")
        rows.append((window, stride, early, result))
    with open(out / "ablation.csv", "w", encoding="utf-8") as fh:
        fh.write("window,stride,early_stop,test_accuracy\n")
        for window, stride, early, result in rows:
            fh.write(f"{window},{stride},{str(early).lower()},{result}\n")
    return EXIT_OK


def cmd_report(cfg, args):
    out = Path(cfg.output)
    if not out.is_dir():
        print(f"report: output directory not found: {out}", file=sys.stderr)
        return EXIT_CONFIG
    artifacts = ["train_report.txt", "metrics.txt", "embed_report.txt",
                 "ablation.csv"]
    found = False
    for name in artifacts:
        path = out / name
        if path.exists():
            found = True
            print(f"--- {name}")
            print(path.read_text(encoding="utf-8").rstrip())
    history = out / "history.csv"
    if history.exists():
        found = True
        lines = history.read_text(encoding="utf-8").strip().splitlines()
        print("--- history.csv (last epoch)")
        print(lines[0])
        print(lines[-1])
    if not found:
        print(f"no artifacts found under {out}")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vibfault",
        description="Bearing fault diagnosis with a compact 1-D CNN on raw "
                    "vibration windows.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the run config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override every seed in the config")
    common.add_argument("--output", default=None, help="override the output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common],
                   help="segment the dataset and write train/test caches")
    sub.add_parser("train", parents=[common],
                   help="train on the cached train split")

    p_eval = sub.add_parser("eval", parents=[common],
                            help="evaluate a checkpoint on the cached test split")
    p_eval.add_argument("--checkpoint", default=None)
    p_eval.add_argument("--cache", default=None)
    p_eval.add_argument("--per-record-vote", action="store_true",
                        help="also report record-level majority-vote accuracy")

    p_embed = sub.add_parser("embed", parents=[common],
                             help="embed extracted features in 2-D")
    p_embed.add_argument("--checkpoint", default=None)
    p_embed.add_argument("--cache", default=None)

    p_abl = sub.add_parser("ablate", parents=[common],
                           help="run the pipeline over a window/stride grid")
    p_abl.add_argument("--cell", action="append", default=[],
                       metavar="WINDOW:STRIDE:on|off",
                       help="one grid cell; repeat for more")

    sub.add_parser("report", parents=[common],
                   help="summarize the artifacts in the output directory")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "embed": cmd_embed,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config, seed=args.seed, output=args.output)
        return _COMMANDS[args.command](cfg, args)
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _SHAPE_ERRORS as exc:
        print(f"shape mismatch: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except errors.VibfaultError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
