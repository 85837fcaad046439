"""Exception hierarchy shared by every solver and oracle."""


class FomsError(Exception):
    """Base class for all package errors."""


class ArgumentError(FomsError, ValueError):
    """Malformed input such as a dimension mismatch or a negative weight."""


class DomainError(FomsError, ValueError):
    """A point lies outside the region where an oracle is defined."""


class UnsupportedError(FomsError, NotImplementedError):
    """No closed form or solver exists for the requested combination."""


class ConfigurationError(FomsError, ValueError):
    """Solver parameters violate a structural requirement."""


class OracleError(FomsError, RuntimeError):
    """An oracle returned a non-finite or otherwise unusable answer."""


class InternalFault(FomsError, RuntimeError):
    """A guarantee that must hold by construction was observed to fail."""


class AssumptionViolation(FomsError, RuntimeError):
    """Measured behaviour contradicts user-supplied problem constants."""
