"""Exception types shared across the toolkit.

The CLI maps any CovExplainError to exit code 2; everything else is a bug.
"""


class CovExplainError(Exception):
    """Base class for expected data/runtime failures."""


class DataError(CovExplainError):
    """Malformed records, schema violations, bad shapes, bad arguments."""


class FormatError(CovExplainError):
    """Binary container violations (embedding files, checkpoints)."""


class TrainingError(CovExplainError):
    """Optimization blew up (non-finite gradients) or was misconfigured."""


class ConvergenceError(CovExplainError):
    """An iterative solver hit its iteration cap before converging."""

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations
