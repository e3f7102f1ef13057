"""Exception types shared across the package."""


class Ts2cError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(Ts2cError, ValueError):
    """Invalid argument: wrong size, out-of-range value, unknown name."""


class InputError(Ts2cError, ValueError):
    """Non-finite or malformed runtime input (e.g. NaN action)."""


class StateError(Ts2cError, RuntimeError):
    """Operation not valid in the current state (step after done, empty buffer)."""


class NumericError(Ts2cError, ArithmeticError):
    """Non-finite loss or network output."""


class DomainError(Ts2cError, ValueError):
    """Mathematical domain violation, e.g. log of a zero probability.

    ``states`` lists the offending state indices when known.
    """

    def __init__(self, message, states=()):
        super().__init__(message)
        self.states = list(states)


class ConfigError(Ts2cError, ValueError):
    """Schema violation in a run configuration; ``path`` names the field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class CheckpointError(Ts2cError, IOError):
    """Missing, corrupt, or architecture-mismatched checkpoint file."""
