"""Exception hierarchy shared across the package.

Every error raised by sacts derives from :class:`SactsError` so callers
(and the CLI) can catch one base class.
"""


class SactsError(Exception):
    """Base class for all sacts errors."""


class ParseError(SactsError):
    """A dataset file could not be parsed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SplitError(SactsError):
    """A series is too short to hold out the forecast horizon."""


class SeriesTooShort(SactsError):
    """A series (or pooled diff sequence) is too short for the requested operation."""


class DegenerateSeries(SactsError):
    """A series is too short or empty for the requested transform."""


class InvalidWindow(SactsError):
    """Window size below the minimum of 2."""


class WindowTooLarge(SactsError):
    """Window size exceeds the available difference sequence."""


class NumericError(SactsError):
    """A non-finite value reached a numeric operation."""


class FilterTooLarge(SactsError):
    """The dilated filter does not fit in the encoded half-row.

    ``min_width`` is the smallest encoded row width that would fit.
    """

    def __init__(self, message: str, min_width: int):
        self.min_width = min_width
        super().__init__(f"{message} (requires encoded width >= {min_width})")


class ShapeError(SactsError):
    """Tensor extents incompatible with the requested operation."""


class EmptyBatch(SactsError):
    """An empty batch was passed to a layer that needs data."""


class StateError(SactsError):
    """Operation called out of order (e.g. backward before forward)."""


class EmptyTrainingSet(SactsError):
    """No training window carries a target; nothing to fit."""


class NotFittedError(SactsError, AttributeError):
    """Estimator used before ``fit``."""


class MetricError(SactsError):
    """Metric inputs empty or of mismatched length."""


class UnsupportedK(SactsError):
    """Model count outside the embedded critical-values table."""


class IncompleteMatrix(SactsError):
    """A metric matrix cell is missing; ranking needs a complete group."""


class CheckpointError(SactsError):
    """A checkpoint file is unreadable or corrupt."""


class CheckpointMismatch(SactsError):
    """Checkpoint hyperparameters contradict the requested configuration."""
