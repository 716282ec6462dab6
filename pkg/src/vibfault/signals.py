"""Vibration signal container and file loaders."""

import fnmatch
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AmbiguousChannel, EmptyFile, NoChannelMatch, ParseError
from .mat5 import parse_mat5


@dataclass
class Signal:
    """One channel of raw vibration samples.

    samples are kept in acquisition units; class_label is the 0-based fault
    class when known, validated against the catalog at segmentation time.
    """

    samples: np.ndarray
    sample_rate_hz: float
    source_id: str = ""
    class_label: int | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.samples.size == 0:
            raise ValueError("signal must hold at least one sample")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.class_label is not None and self.class_label < 0:
            raise ValueError(f"class_label must be non-negative, got {self.class_label}")

    def __len__(self):
        return self.samples.size


def load_record(source, channel_pattern, sample_rate_hz, source_id=None):
    """Load one channel from a MAT-file record.

    Args:
        source: path to a .mat file, or its raw bytes.
        channel_pattern: glob-style pattern that must match exactly one
            variable name (e.g. "*_DE_time").
        sample_rate_hz: acquisition rate to attach; MAT files do not carry it.
        source_id: identifier for provenance; defaults to the path or the
            matched variable name.

    Raises:
        NoChannelMatch / AmbiguousChannel on zero or multiple matches, plus
        anything parse_mat5 raises.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
        default_id = None
    else:
        path = Path(source)
        data = path.read_bytes()
        default_id = str(path)
    arrays = parse_mat5(data)
    matches = sorted(n for n in arrays if fnmatch.fnmatchcase(n, channel_pattern))
    if not matches:
        raise NoChannelMatch(
            f"pattern {channel_pattern!r} matches none of {sorted(arrays)}")
    if len(matches) > 1:
        raise AmbiguousChannel(
            f"pattern {channel_pattern!r} matches {matches}; narrow it")
    name = matches[0]
    # Flatten in storage order (MAT arrays are column-major on disk).
    samples = arrays[name].ravel(order="F")
    return Signal(samples, sample_rate_hz,
                  source_id=source_id or default_id or name)


def load_csv(path, sample_rate_hz, source_id=None):
    """Load a one-value-per-line CSV fixture into a Signal.

    An optional single header line (first token non-numeric) is skipped;
    blank lines are ignored.
    """
    path = Path(path)
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if lineno == 1 and not values:
                    continue  # header line
                raise ParseError(
                    f"{path}: line {lineno}: not a number: {text!r}",
                    line=lineno) from None
    if not values:
        raise EmptyFile(f"{path}: no samples")
    return Signal(np.array(values), sample_rate_hz,
                  source_id=source_id or str(path))


def read_manifest(path):
    """Read a dataset manifest: one `record_name<TAB>file_path` per line.

    Returns a list of (record_name, file_path) tuples. Blank lines and lines
    starting with '#' are skipped.
    """
    path = Path(path)
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.rstrip("\r\n")
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            parts = text.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(
                    f"{path}: line {lineno}: expected 'record_name<TAB>file_path'",
                    line=lineno)
            entries.append((parts[0], parts[1]))
    return entries
