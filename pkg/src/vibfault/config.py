"""Run configuration: flat `key = value` files with dotted sections.

Every key has a default; unknown keys and malformed values are rejected so
typos fail loudly. `#` starts a comment, blank lines are ignored.
"""

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .model import ModelConfig
from .pipeline import SPLIT_MODES, SplitSpec
from .synth import FAULT_KINDS
from .train import EarlyStopConfig, TrainConfig
from .tsne import TsneConfig

DATASETS = ("synthetic", "cwru", "pu", "csv-manifest")
CATALOGS = ("cwru", "pu")


def _boolean(raw):
    value = raw.strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _string_list(raw):
    return tuple(part.strip() for part in raw.split(",") if part.strip())


# key -> (parser, default)
SCHEMA = {
    "dataset": (str, "synthetic"),
    "manifest": (str, ""),
    "catalog": (str, "cwru"),
    "channel_pattern": (str, "*_DE_time"),
    "sample_rate_hz": (float, 12_000.0),
    "window": (int, 500),
    "stride": (int, 300),
    "normalize": (_boolean, True),
    "output": (str, "out"),
    "split.fraction": (float, 0.7),
    "split.mode": (str, "random_stratified"),
    "split.seed": (int, 0),
    "model.conv1_filters": (int, 64),
    "model.conv1_kernel": (int, 100),
    "model.conv2_filters": (int, 32),
    "model.conv2_kernel": (int, 50),
    "model.pool_size": (int, 4),
    "model.pool_stride": (int, 4),
    "model.dense_hidden": (int, 100),
    "model.dropout_p": (float, 0.0),
    "train.max_epochs": (int, 50),
    "train.batch_size": (int, 32),
    "train.learning_rate": (float, 1e-3),
    "train.beta1": (float, 0.9),
    "train.beta2": (float, 0.999),
    "train.epsilon": (float, 1e-8),
    "train.early_stop": (_boolean, True),
    "train.patience": (int, 5),
    "train.val_fraction": (float, 0.1),
    "train.seed": (int, 0),
    "tsne.perplexity": (float, 30.0),
    "tsne.iterations": (int, 1000),
    "tsne.learning_rate": (float, 200.0),
    "tsne.early_exaggeration": (float, 12.0),
    "tsne.max_points": (int, 2000),
    "tsne.seed": (int, 0),
    "synth.kinds": (_string_list, ("healthy", "inner", "outer", "ball")),
    "synth.windows_per_class": (int, 200),
    "synth.rpm": (float, 1800.0),
    "synth.noise_std": (float, 0.25),
    "synth.impulse_amplitude": (float, 2.0),
    "synth.resonance_hz": (float, 3000.0),
    "synth.decay_rate": (float, 800.0),
    "synth.seed": (int, 0),
}


def parse_config_file(path):
    """Parse a config file into {key: typed value}; schema defaults fill in
    anything not set."""
    values = {key: default for key, (_, default) in SCHEMA.items()}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, raw = text.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
        parser, _ = SCHEMA[key]
        try:
            values[key] = parser(raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}: line {lineno}: {exc}") from exc
    return values


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    manifest: str
    catalog: str
    channel_pattern: str
    sample_rate_hz: float
    window: int
    stride: int
    normalize: bool
    output: str
    split: SplitSpec
    train: TrainConfig
    tsne: TsneConfig
    model_conv1_filters: int
    model_conv1_kernel: int
    model_conv2_filters: int
    model_conv2_kernel: int
    model_pool_size: int
    model_pool_stride: int
    model_dense_hidden: int
    model_dropout_p: float
    synth_kinds: tuple
    synth_windows_per_class: int
    synth_rpm: float
    synth_noise_std: float
    synth_impulse_amplitude: float
    synth_resonance_hz: float
    synth_decay_rate: float
    synth_seed: int

    def model_config(self, class_count):
        return ModelConfig(
            window_len=self.window,
            class_count=class_count,
            conv1_filters=self.model_conv1_filters,
            conv1_kernel=self.model_conv1_kernel,
            conv2_filters=self.model_conv2_filters,
            conv2_kernel=self.model_conv2_kernel,
            pool_size=self.model_pool_size,
            pool_stride=self.model_pool_stride,
            dense_hidden=self.model_dense_hidden,
            dropout_p=self.model_dropout_p,
        )


def load_run_config(path, seed=None, output=None):
    """Read a config file into a RunConfig.

    seed, when given, overrides every seed in the file (split, train, tsne,
    synth); output overrides the output directory.
    """
    v = parse_config_file(path)
    if seed is not None:
        for key in ("split.seed", "train.seed", "tsne.seed", "synth.seed"):
            v[key] = seed
    if output is not None:
        v["output"] = str(output)

    if v["dataset"] not in DATASETS:
        raise ConfigError(f"dataset must be one of {DATASETS}, got {v['dataset']!r}")
    if v["catalog"] not in CATALOGS:
        raise ConfigError(f"catalog must be one of {CATALOGS}, got {v['catalog']!r}")
    if v["split.mode"] not in SPLIT_MODES:
        raise ConfigError(f"split.mode must be one of {SPLIT_MODES}")
    bad_kinds = [k for k in v["synth.kinds"] if k not in FAULT_KINDS]
    if bad_kinds:
        raise ConfigError(f"synth.kinds has unknown kinds {bad_kinds}; "
                          f"valid: {FAULT_KINDS}")
    if len(v["synth.kinds"]) < 2:
        raise ConfigError("synth.kinds needs at least 2 classes")
    if len(set(v["synth.kinds"])) != len(v["synth.kinds"]):
        raise ConfigError("synth.kinds has duplicates")
    if v["dataset"] != "synthetic" and not v["manifest"]:
        raise ConfigError(f"dataset {v['dataset']!r} requires a manifest path")

    try:
        split_spec = SplitSpec(v["split.fraction"], v["split.mode"], v["split.seed"])
        train_cfg = TrainConfig(
            max_epochs=v["train.max_epochs"],
            batch_size=v["train.batch_size"],
            learning_rate=v["train.learning_rate"],
            beta1=v["train.beta1"],
            beta2=v["train.beta2"],
            epsilon=v["train.epsilon"],
            early_stop=EarlyStopConfig(
                enabled=v["train.early_stop"],
                patience=v["train.patience"],
                val_fraction=v["train.val_fraction"],
            ),
            seed=v["train.seed"],
        )
        tsne_cfg = TsneConfig(
            perplexity=v["tsne.perplexity"],
            iterations=v["tsne.iterations"],
            learning_rate=v["tsne.learning_rate"],
            early_exaggeration=v["tsne.early_exaggeration"],
            max_points=v["tsne.max_points"],
            seed=v["tsne.seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        dataset=v["dataset"], manifest=v["manifest"], catalog=v["catalog"],
        channel_pattern=v["channel_pattern"],
        sample_rate_hz=v["sample_rate_hz"],
        window=v["window"], stride=v["stride"], normalize=v["normalize"],
        output=v["output"], split=split_spec, train=train_cfg, tsne=tsne_cfg,
        model_conv1_filters=v["model.conv1_filters"],
        model_conv1_kernel=v["model.conv1_kernel"],
        model_conv2_filters=v["model.conv2_filters"],
        model_conv2_kernel=v["model.conv2_kernel"],
        model_pool_size=v["model.pool_size"],
        model_pool_stride=v["model.pool_stride"],
        model_dense_hidden=v["model.dense_hidden"],
        model_dropout_p=v["model.dropout_p"],
        synth_kinds=v["synth.kinds"],
        synth_windows_per_class=v["synth.windows_per_class"],
        synth_rpm=v["synth.rpm"],
        synth_noise_std=v["synth.noise_std"],
        synth_impulse_amplitude=v["synth.impulse_amplitude"],
        synth_resonance_hz=v["synth.resonance_hz"],
        synth_decay_rate=v["synth.decay_rate"],
        synth_seed=v["synth.seed"],
    )
