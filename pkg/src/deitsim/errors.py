"""Exception types shared across the package."""


class DeitError(Exception):
    """Base class for package errors."""


class InvalidParameter(DeitError, ValueError):
    """A physical parameter is outside its admissible domain."""


class ConfigError(DeitError):
    """A configuration document could not be parsed or resolved.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line number in the source document.
    key : str, optional
        Offending key.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class SolverError(DeitError):
    """A linear solve failed or the system was degenerate."""
