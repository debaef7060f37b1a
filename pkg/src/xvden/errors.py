"""Exception types shared across the package.

Every error raised on a contract violation derives from ``XvdenError`` and
carries a short machine-readable ``category`` used by the command-line
front-end when formatting ``error: <category>: <detail>`` lines.
"""


class XvdenError(Exception):
    """Base class for all package errors."""

    category = "runtime"


class ShapeError(XvdenError):
    """Dimension mismatch between operands."""

    category = "shape"


class NotPositiveDefiniteError(XvdenError):
    """A matrix required to be SPD has a non-positive pivot."""

    category = "not-positive-definite"


class ConfigError(XvdenError):
    """Invalid configuration value."""

    category = "config"


class DataError(XvdenError):
    """Invalid or degenerate data (empty training set, zero vector, ...)."""

    category = "data"


class IdentifiabilityError(DataError):
    """Labeled data cannot identify the model (single speaker, all singletons)."""

    category = "identifiability"


class MissingKeyError(XvdenError):
    """A key referenced by a trial or manifest cannot be resolved."""

    category = "missing-key"


class FormatError(XvdenError):
    """Malformed file content (bad magic, truncation, schema mismatch)."""

    category = "format"


class EmptyInputError(XvdenError):
    """An input file or score set contains no usable records."""

    category = "empty-input"
