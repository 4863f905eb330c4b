"""Exception hierarchy shared by every swlb module.

Two families matter to callers: :class:`InputError` covers bad user input
(files, schemas, configuration, parameter domains) and maps to CLI exit
code 2, while :class:`NumericalError` covers failures that arise during
estimation and maps to exit code 3.
"""

from __future__ import annotations


class SwlbError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SwlbError):
    """Invalid user-supplied data, schema, or configuration."""


class NumericalError(SwlbError):
    """A computation failed in a way the caller may need to handle."""


class NonPositiveWeight(InputError):
    """A sampling weight is zero, negative, or non-finite."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class TooFewObservations(InputError):
    """Fewer than two observations were supplied."""


class MissingColumn(InputError):
    """A column named by the schema is absent from the file header."""


class ParseError(InputError):
    """A cell could not be parsed as a finite number."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class DomainError(InputError):
    """A parameter vector lies outside the model's domain."""


class ConfigError(InputError):
    """A scenario file or CLI request is invalid."""


class DegenerateDraw(NumericalError):
    """A random weight vector summed to zero and could not be normalized."""


class Separation(NumericalError):
    """The probit likelihood has no finite maximizer (separated data)."""


class NonConvergence(NumericalError):
    """An iterative optimizer exhausted its iteration budget."""


class DegenerateVariance(NumericalError):
    """A weighted variance estimate collapsed below its floor."""


class SingularInformation(NumericalError):
    """The weighted information matrix is numerically singular."""


class TooManyFailures(NumericalError):
    """Excluded replicates exceeded the configured ceiling."""


class TooFewDraws(NumericalError):
    """Not enough successful draws to form the requested summary."""
