"""Exception hierarchy shared across the package."""


class SlamStopError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SlamStopError, ValueError):
    """Invalid configuration, file contents, or argument shapes."""


class DomainError(SlamStopError, ValueError):
    """Numeric input outside the operation's domain (NaN, negative weight, asymmetric matrix...)."""


class DisconnectedGraphError(SlamStopError):
    """The pose graph (or its positively weighted part) is not connected."""


class EnumerationLimitError(SlamStopError):
    """Brute-force enumeration refused because the instance is too large."""


class SimulationFault(SlamStopError):
    """The simulator reached a physically impossible state."""


class PoseGraphParseError(ConfigurationError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CriterionUnavailableError(ConfigurationError):
    """A privileged criterion was configured without the ground truth it needs."""
