# src/errors.py
# Exception types raised by the simulator. Each also derives from the closest builtin.

from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ParameterDomainError(SimulationError, ValueError):
    pass


class SingularGeometryError(SimulationError, ArithmeticError):
    """A transmitter sits on top of a receiver while the near-field cutoff is zero."""


class UsageError(SimulationError, ValueError):
    pass


class InvalidConfigurationError(SimulationError, ValueError):
    pass


class InfiniteDelayError(SimulationError, ArithmeticError):
    pass


class ConfigError(SimulationError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)
