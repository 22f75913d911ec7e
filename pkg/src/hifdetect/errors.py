"""Exception types shared across the package.

The CLI maps these onto exit codes: domain errors (bad values, singular
matrices, non-convergence, undefined metrics) exit with 1, while file and
configuration problems exit with 2.
"""


class HifDetectError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(HifDetectError, ValueError):
    """An argument violates a documented precondition."""


class IllConditionedError(HifDetectError):
    """A matrix is singular or too ill-conditioned for the requested operation."""


class ConvergenceError(HifDetectError):
    """An iterative solver exhausted its iteration budget."""


class UndefinedMetricError(HifDetectError):
    """A metric's denominator is empty for the given data."""


class DataFormatError(HifDetectError):
    """A data, model, or report file does not parse.

    Args:
        path: File the error was found in.
        line: 1-based line number, or 0 when no single line is at fault.
        reason: Human-readable description.
    """

    def __init__(self, path: str, line: int, reason: str):
        self.path = str(path)
        self.line = int(line)
        self.reason = reason
        super().__init__(f"{self.path}:{self.line}: {reason}")


class ConfigError(HifDetectError):
    """A run configuration is missing, malformed, or inconsistent."""
