"""Exception hierarchy shared by the toolkit.

The CLI maps :class:`UsageError` to exit code 1 and :class:`DataError` to
exit code 2.
"""

from __future__ import annotations


class XInflectError(Exception):
    """Base class for all toolkit errors."""


class UsageError(XInflectError, ValueError):
    """Raised when an operation is called with arguments it cannot accept."""


class DataError(XInflectError, ValueError):
    """Raised when input data is malformed.

    ``source`` and ``lineno`` are filled in when the offending location is
    known, and are included in ``str(err)``.
    """

    def __init__(self, message: str, *, source: str | None = None, lineno: int | None = None):
        self.message = message
        self.source = source
        self.lineno = lineno
        super().__init__(str(self))

    def __str__(self) -> str:
        where = ""
        if self.source:
            where = self.source
        if self.lineno is not None:
            where = f"{where}:{self.lineno}" if where else f"line {self.lineno}"
        return f"{where}: {self.message}" if where else self.message


class ConlluError(DataError):
    """Malformed CoNLL-U input."""


class UniMorphError(DataError):
    """Malformed UniMorph TSV input."""


class UndefinedCorrelationError(DataError):
    """Pearson correlation requested on a zero-variance vector."""
