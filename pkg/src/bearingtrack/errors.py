"""Exception hierarchy shared across the package."""

from __future__ import annotations


class FormationError(Exception):
    """Base class for all errors raised by bearingtrack."""


class CoincidentAgents(FormationError):
    """Two agents are closer than the coincidence/abort tolerance."""

    def __init__(self, i: int | None, j: int | None, distance: float):
        self.i = i
        self.j = j
        self.distance = distance
        who = "points" if i is None else f"agents {i + 1} and {j + 1}"
        super().__init__(f"{who} coincide (distance {distance:.3e} m)")


class DegenerateTarget(FormationError):
    """Two target positions coincide."""


class SingularSystem(FormationError):
    """The follower block of the bearing Laplacian is (numerically) singular."""


class InconsistentLeaders(FormationError):
    """Leader positions disagree with the leader-leader desired bearings."""


class UnrealizableBearings(FormationError):
    """No formation reproduces the desired bearings from the given leaders."""


class InvalidKappa(FormationError):
    """Requested safety distance is outside (0, min target distance)."""


class ParseError(FormationError):
    """Scenario or trace file could not be parsed."""


class ValidationError(FormationError):
    """A scenario violates one of its invariants."""

    def __init__(self, field: str, rule: str):
        self.field = field
        self.rule = rule
        super().__init__(f"{field}: {rule}")
