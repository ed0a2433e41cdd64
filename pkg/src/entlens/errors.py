"""Exception types shared across the package.

The CLI maps these onto exit codes: validation failures exit 2, coverage
errors exit 3, I/O and file-format errors exit 4.
"""


class EntlensError(Exception):
    """Base class for package errors."""


class DomainError(EntlensError, ValueError):
    """Input outside the advertised domain (inside the horizon, |x| > 1, ...)."""


class ConvergenceError(EntlensError, RuntimeError):
    """An iterative scheme failed to reach its tolerance."""


class SeriesTruncationError(ConvergenceError):
    """A series hit its term cap before the remainder tolerance."""

    def __init__(self, message, achieved_eps=None):
        super().__init__(message)
        self.achieved_eps = achieved_eps


class IllConditionedError(EntlensError, RuntimeError):
    """Coefficient extraction residual too large to trust."""


class NoSolutionError(EntlensError, RuntimeError):
    """No geodesic of the requested branch connects the endpoints."""


class CoverageError(EntlensError, LookupError):
    """A mode table does not contain a requested grid point."""


class TableFormatError(EntlensError, IOError):
    """A mode-table file is unreadable."""


class ChecksumError(TableFormatError):
    """Stored checksum does not match the payload."""


class VersionError(TableFormatError):
    """File format version not supported by this code."""

    def __init__(self, file_version, supported_version):
        super().__init__(
            f"table format version {file_version} not supported "
            f"(this build reads version {supported_version})"
        )
        self.file_version = file_version
        self.supported_version = supported_version
