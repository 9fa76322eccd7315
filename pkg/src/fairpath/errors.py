"""Exception types shared across the toolbox."""

from __future__ import annotations


class FairpathError(Exception):
    """Base class for all toolbox errors."""


class SchemaError(FairpathError):
    """The column schema itself is malformed (roles, kinds, duplicates)."""


class DatasetValidationError(FairpathError):
    """A data cell or the table as a whole violates the audit-table contract.

    ``row`` is the 1-based line number in the CSV (the header is line 1),
    ``column`` the offending column name; either may be None when the error
    is not tied to a position.
    """

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class UnknownGroupError(FairpathError):
    """A group name was requested that does not occur in the dataset."""


class DegenerateGroupError(FairpathError):
    """A group has only one label class, so rate-based fitting is undefined."""


class NoFeasiblePointError(FairpathError):
    """Only trivial (random/constant) operating points satisfy the constraint."""


class NonTerminalTraceError(FairpathError):
    """A recommendation was requested before the decision trace reached a terminal."""


class RebalanceLoopError(FairpathError):
    """The data-quality loop hit its round limit and needs an explicit override."""
