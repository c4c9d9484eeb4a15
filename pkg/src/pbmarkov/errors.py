"""Exception hierarchy shared across the package."""


class PBMarkovError(Exception):
    """Base class for all package errors."""


class ConfigError(PBMarkovError, ValueError):
    """Invalid or unparsable network configuration."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DomainError(PBMarkovError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(PBMarkovError):
    """The state space is too large to enumerate."""


class NumericalConsistencyError(PBMarkovError):
    """An internal numerical invariant (for example row stochasticity) was violated."""


class SolverError(PBMarkovError):
    """The stationary distribution could not be computed or certified."""
