"""Exception hierarchy with stable CLI exit codes.

Each category maps to a fixed exit code so scripts can branch on failures.
"""


class PedreconError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InvalidInputError(PedreconError):
    """Arguments or records violate a documented precondition."""

    exit_code = 2


class MissingFileError(PedreconError):
    """A required input file or directory does not exist."""

    exit_code = 3


class FormatError(PedreconError):
    """A file exists but its contents cannot be parsed."""

    exit_code = 4


class DimensionMismatchError(PedreconError):
    """Rasters, calibration, or paired inputs disagree on dimensions."""

    exit_code = 5


class DegenerateInputError(PedreconError):
    """Input is well-formed but geometrically unusable."""

    exit_code = 6


class InvalidDisparityError(DegenerateInputError):
    """Disparity below the minimum measurable value."""


class PipelineStageError(PedreconError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
