"""First-order methods for composite convex problems."""

from .errors import (
    ArgumentError,
    AssumptionViolation,
    ConfigurationError,
    DomainError,
    FomsError,
    InternalFault,
    OracleError,
    UnsupportedError,
)
from .problem import CompositeProblem, FeasibleSet, NonsmoothPart, SmoothPart
from .trace import OracleCounter, SolverTrace

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "AssumptionViolation",
    "CompositeProblem",
    "ConfigurationError",
    "DomainError",
    "FeasibleSet",
    "FomsError",
    "InternalFault",
    "NonsmoothPart",
    "OracleCounter",
    "OracleError",
    "SmoothPart",
    "SolverTrace",
    "UnsupportedError",
]
