"""Exception hierarchy used across the package."""


class MhfemError(Exception):
    """Base class for all package errors."""


class ConfigError(MhfemError, ValueError):
    """Invalid or inconsistent configuration / parameters."""


class GeometryError(MhfemError, ValueError):
    """Degenerate geometry, or a point outside the meshed domain."""


class MeshTopologyError(MhfemError):
    """Interface traces that do not cover the interface exactly once."""


class ParseError(MhfemError):
    """Malformed mesh file.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number in the offending file.
    section : str, optional
        File section being parsed when the error occurred.
    """

    def __init__(self, message, line=None, section=None):
        self.line = line
        self.section = section
        where = []
        if section is not None:
            where.append(f"section {section}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class EvalError(MhfemError, ValueError):
    """A user-supplied field returned non-finite values."""


class SolveError(MhfemError):
    """Failed factorization or an unacceptable linear-solve residual."""

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class DivergenceError(MhfemError):
    """Time stepping produced non-finite values."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class HorizonError(MhfemError, ValueError):
    """A time-dependent map was queried past its validity horizon."""
