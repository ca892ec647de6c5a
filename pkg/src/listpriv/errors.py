"""Exception hierarchy.

Every error carries a stable ``exit_code`` so the command line can map
failures onto documented process exit codes.
"""


class ListPrivError(Exception):
    exit_code = 1


class ParseError(ListPrivError):
    """Malformed input file; carries a 1-based line and column."""

    exit_code = 2

    def __init__(self, message, line=1, column=1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class BudgetError(ListPrivError):
    """An enumeration or search budget was exhausted.

    ``lower_bound`` holds the best certified bound found before giving up,
    when the operation can provide one.
    """

    exit_code = 3

    def __init__(self, message, lower_bound=None, **info):
        self.lower_bound = lower_bound
        self.info = info
        super().__init__(message)


class GateError(BudgetError):
    """Refusal to run a construction whose theoretical host size exceeds the cap."""


class RealizabilityError(ListPrivError):
    exit_code = 4


class PreconditionError(ListPrivError):
    exit_code = 5


class ParameterError(PreconditionError):
    pass


class DomainMismatchError(PreconditionError):
    pass


class ChainError(PreconditionError):
    pass


class CompatibilityError(PreconditionError):
    pass


class ProtocolError(PreconditionError):
    pass


class FamilyError(PreconditionError):
    pass


class ExtractionError(ListPrivError):
    pass


class ConstructionError(ListPrivError):
    """A lazy search could not complete inside the host it was given."""
