"""Bearing-constrained formation tracking for nonholonomic agents in 2-D and 3-D."""

from .control import ControlGains, Law
from .dynamics import IntegratorConfig, SimulationTrace, SystemState, TrackingSystem
from .errors import (
    CoincidentAgents,
    DegenerateTarget,
    FormationError,
    InconsistentLeaders,
    InvalidKappa,
    ParseError,
    SingularSystem,
    UnrealizableBearings,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "CoincidentAgents",
    "ControlGains",
    "DegenerateTarget",
    "FormationError",
    "InconsistentLeaders",
    "IntegratorConfig",
    "InvalidKappa",
    "Law",
    "ParseError",
    "SimulationTrace",
    "SingularSystem",
    "SystemState",
    "TrackingSystem",
    "UnrealizableBearings",
    "ValidationError",
]
