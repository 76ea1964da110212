"""Exception types shared across the package."""


class RisEstimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(RisEstimError, ValueError):
    """Operand shapes are mutually inconsistent; the message names the operand."""


class RankDeficientError(RisEstimError, ValueError):
    """A linear system is underdetermined or numerically rank deficient.

    Attributes
    ----------
    rank : int
        Numerical rank reported by the decomposition.
    """

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


class UnsupportedFamilyError(RisEstimError, ValueError):
    """Training family is unknown, or unsupported for the requested operation."""


class UnsupportedSizeError(RisEstimError, ValueError):
    """A size constraint of a construction is violated (e.g. Hadamard order)."""


class IdentifiabilityError(RisEstimError, ValueError):
    """Requested estimate is not identifiable from the available observations."""


class MemoryBudgetError(RisEstimError, ValueError):
    """A dense materialization would exceed the configured element budget."""


class ConfigValidationError(RisEstimError, ValueError):
    """Experiment configuration is invalid.

    Attributes
    ----------
    errors : list[str]
        Every violated constraint, aggregated before reporting.
    """

    def __init__(self, errors: list):
        super().__init__("invalid configuration: " + "; ".join(errors))
        self.errors = list(errors)
