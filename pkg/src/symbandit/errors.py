"""Exception and warning types shared across the package."""


class SymbanditError(Exception):
    """Base class for library errors."""


class ArgumentError(SymbanditError, ValueError):
    pass


class DimensionMismatch(SymbanditError, ValueError):
    pass


class PartitionError(SymbanditError, ValueError):
    pass


class OverlapError(PartitionError):
    pass


class CoverageError(PartitionError):
    pass


class NotIntervalError(PartitionError):
    pass


class TooLargeError(SymbanditError):
    """Raised when an exhaustive enumeration would exceed the configured cap."""


class NoCoarseningError(SymbanditError):
    pass


class EmptyModelList(SymbanditError, ValueError):
    pass


class EmptyPool(SymbanditError, ValueError):
    pass


class EmptyArmSet(SymbanditError, ValueError):
    pass


class InvalidPhase(SymbanditError, ValueError):
    pass


class InfeasibleSeparation(SymbanditError):
    pass


class ConfigError(SymbanditError, ValueError):
    """Configuration problem tied to a named field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SpanWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass
