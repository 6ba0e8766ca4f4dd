"""Exception hierarchy shared across the package."""


class ScnnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ScnnError, ValueError):
    """Tensor shapes do not satisfy an operation's contract."""


class GraphError(ScnnError, ValueError):
    """Misuse of the computation graph (e.g. backward on a non-scalar)."""


class NonFiniteError(ScnnError, FloatingPointError):
    """A forward or backward pass produced NaN or Inf."""


class DataError(ScnnError, ValueError):
    """Dataset content is malformed or inconsistent."""


class ConfigError(ScnnError, ValueError):
    """A configuration value or key is invalid."""


class FormatError(ScnnError, ValueError):
    """A file does not match its declared binary or text format."""


class VocabularyMismatchError(ScnnError, ValueError):
    """Checkpoint vocabulary hash does not match the dataset encoding."""
