"""
Error taxonomy for mmdinf.

Every failure raised by the library belongs to one of two families that the
CLI turns into exit codes: input problems (exit 2) and numerical or
degenerate-data problems (exit 3).
"""
from typing import Optional, Sequence


class MMDInfError(Exception):
    """Base class of every error raised by this package."""

    exit_code: int = 1


class InputError(MMDInfError, ValueError):
    """Bad arguments, shape mismatches, or parameters outside their domain."""

    exit_code = 2


class ManifestError(InputError):
    """The dataset manifest is missing, malformed, or inconsistent."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class FeatureParseError(InputError):
    """A feature file could not be parsed; `position` is a byte offset (FMAT) or line number (CSV)."""

    def __init__(self, message: str, path: Optional[str] = None, position: Optional[int] = None,
                 unit: str = "byte"):
        super().__init__(f"{path or '<memory>'} ({unit} {position}): {message}")
        self.path = path
        self.position = position
        self.unit = unit


class BadMagicError(FeatureParseError):
    pass


class TruncatedPayloadError(FeatureParseError):
    pass


class RowWidthError(FeatureParseError):
    pass


class MalformedValueError(FeatureParseError):
    pass


class NonFiniteValueError(InputError):
    """Feature data contains NaN or infinity."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f"{path or '<memory>'}: {message}")
        self.path = path


class NumericalError(MMDInfError):
    """Base of the degenerate / numerical family (exit code 3)."""

    exit_code = 3


class DegenerateDataError(NumericalError):
    """Data carries no spread to learn a bandwidth from."""


class DegenerateCovarianceError(NumericalError):
    """The estimated score covariance is singular even after the ridge."""

    def __init__(self, message: str, columns: Sequence[int] = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class DegenerateVarianceError(NumericalError):
    pass


class InconsistentEventError(NumericalError):
    """The selection event does not hold for the observed scores."""


class InternalConsistencyError(NumericalError):
    pass


class NumericalFailureError(NumericalError, ArithmeticError):
    """A probability could not be evaluated without producing NaN."""


class TrialFailedError(MMDInfError):
    """A simulation trial failed; wraps the underlying error."""

    def __init__(self, seed: int, trial: int, cause: BaseException):
        super().__init__(f"trial {trial} (seed {seed}) failed: {cause}")
        self.seed = seed
        self.trial = trial
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)


class StorageIOError(InputError):
    """A file could not be opened, read, or written."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f"{path or '<memory>'}: {message}")
        self.path = path
