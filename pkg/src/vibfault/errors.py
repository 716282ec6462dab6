"""Exception types shared across the package."""


class VibfaultError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(VibfaultError):
    """Bad configuration file, key, or value."""


# --- MAT-file parsing ---------------------------------------------------

class BadHeader(VibfaultError):
    """File is not a MAT-file Level 5 stream (magic/version mismatch)."""


class Truncated(VibfaultError):
    """A data element extends past the end of the byte stream."""


class DecompressFailed(VibfaultError):
    """A compressed element could not be inflated."""


class NoNumericArrays(VibfaultError):
    """The file holds no real numeric arrays the pipeline can use."""


# --- signal loading -----------------------------------------------------

class NoChannelMatch(VibfaultError):
    """No variable name matches the channel pattern."""


class AmbiguousChannel(VibfaultError):
    """More than one variable name matches the channel pattern."""


class ParseError(VibfaultError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyFile(VibfaultError):
    """Input file holds no samples."""


# --- record catalogs ----------------------------------------------------

class UnknownRecord(VibfaultError):
    """Record name matches no catalog pattern."""


class AmbiguousRecord(VibfaultError):
    """Record name matches more than one catalog pattern."""


# --- segmentation / pipeline --------------------------------------------

class WindowTooLong(VibfaultError):
    """Window length exceeds the signal length."""


class ZeroStride(VibfaultError):
    """Stride must be at least 1."""


class ClassTooSmall(VibfaultError):
    """A class has too few segments to split."""


# --- network kernels and model ------------------------------------------

class ShapeMismatch(VibfaultError):
    """Operand shapes are incompatible."""


class KernelTooLong(VibfaultError):
    """Convolution kernel is longer than its input."""


class PoolTooLong(VibfaultError):
    """Pooling window is longer than its input."""


class LabelOutOfRange(VibfaultError):
    """Class label outside [0, class_count)."""


class ShapeUnderflow(VibfaultError):
    """Window too short for the configured layer stack."""


class NonFiniteActivation(VibfaultError):
    """NaN or Inf appeared in a forward pass."""


# --- training -----------------------------------------------------------

class NonFiniteGradient(VibfaultError):
    """NaN or Inf appeared in a gradient buffer."""


class NonFiniteLoss(VibfaultError):
    """NaN or Inf loss; carries epoch/batch diagnostics."""

    def __init__(self, message, epoch=None, batch=None, value=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.value = value


class EmptyDataset(VibfaultError):
    """Training requires at least one segment."""


# --- binary artifact files ----------------------------------------------

class BadMagic(VibfaultError):
    """File does not start with the expected magic bytes."""


class VersionUnsupported(VibfaultError):
    """File format version not understood by this build."""


class TruncatedFile(VibfaultError):
    """File ends before the declared payload."""


# --- evaluation ---------------------------------------------------------

class LengthMismatch(VibfaultError):
    """True and predicted label sequences differ in length."""


class UndefinedOnEmpty(VibfaultError):
    """Metric undefined for empty inputs."""


# --- embedding ----------------------------------------------------------

class DegenerateInput(VibfaultError):
    """All input points are identical; no embedding possible."""


class OneClassOnly(VibfaultError):
    """Silhouette needs at least two classes with two points each."""
