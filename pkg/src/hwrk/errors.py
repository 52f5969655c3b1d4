"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``ParameterError`` -> 3.
I/O problems surface as the builtin ``OSError`` family (exit 1).
"""

from __future__ import annotations


class HwrkError(Exception):
    """Base class for all package errors."""


class DataError(HwrkError, ValueError):
    """Input data violates a structural or semantic invariant."""


class IngestError(DataError):
    """A file could not be parsed; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ParameterError(HwrkError, ValueError):
    """An argument or configuration value is outside its valid domain."""
