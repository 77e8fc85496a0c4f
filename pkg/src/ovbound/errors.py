"""Exception hierarchy.

Errors split into two families that map onto CLI exit codes: bad input or
configuration (exit 2) and failures of the computation itself (exit 1).
"""


class OvboundError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class InputError(OvboundError, ValueError):
    """Malformed data, configuration or arguments."""

    exit_code = 2


class InsufficientDataError(InputError):
    pass


class InvalidSpecError(InputError):
    pass


class DomainError(InputError):
    """An argument lies outside the domain on which a formula is defined."""


class ComputationError(OvboundError, ArithmeticError):
    exit_code = 1


class SingularDesignError(ComputationError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InternalConsistencyError(ComputationError):
    pass


class DegenerateCubicError(ComputationError):
    """Leading coefficient is numerically zero; use the quadratic instead."""


class NoAnchorError(ComputationError):
    """Box extension never reached the unique-real-root region."""


class PoleError(ComputationError):
    """Evaluation requested at (or next to) the pole of the delta* function."""


class DegenerateProfileError(ComputationError):
    pass
