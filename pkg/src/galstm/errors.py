"""Exception types shared across the package."""


class GalstmError(Exception):
    """Base class for all package errors."""


class SchemaError(GalstmError):
    """CSV header/structure does not match the expected schema."""


class RowParseError(GalstmError):
    """A data row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateDateError(GalstmError):
    """Two rows share the same date."""


class EmptySeriesError(GalstmError):
    """A series with no records where one is required."""


class DegenerateScaleError(GalstmError):
    """Min-max scaling requested on a constant column."""


class InsufficientDataError(GalstmError):
    """Not enough rows for the requested lookback window."""


class SplitError(GalstmError):
    """Chronological split boundary outside the usable date range."""


class ShapeError(GalstmError):
    """Matrix/vector dimensions do not conform."""


class NumericError(GalstmError):
    """A non-finite value appeared where a finite one is required."""


class DivergedError(GalstmError):
    """Training produced a non-finite loss; carries the offending epoch."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}: non-finite loss")
        self.epoch = epoch


class ConfigError(GalstmError):
    """One or more invalid run-configuration fields (all listed at once)."""
