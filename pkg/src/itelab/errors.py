"""Exception hierarchy shared by every itelab module."""

from __future__ import annotations


class ItelabError(Exception):
    """Base class for all library errors."""


class DomainError(ItelabError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class CapacityError(ItelabError, ValueError):
    """An argument lies outside the box where accuracy is guaranteed."""


class ProfileError(ItelabError, ValueError):
    """A medium profile violates one of its structural invariants."""


class IntegrationError(ItelabError, RuntimeError):
    """The radial integrator could not meet its tolerance."""

    def __init__(self, message: str, radius: float | None = None):
        super().__init__(message if radius is None else f"{message} (at r={radius:.6g})")
        self.radius = radius


class AmbiguityError(ItelabError, ValueError):
    """A query energy sits within tolerance of a Dirichlet eigenvalue."""


class NotAnEigenvalueError(ItelabError, ValueError):
    """An energy passed as an eigenvalue fails the boundary-trace test."""


class MismatchError(ItelabError, RuntimeError):
    """Two independent estimates of the same quantity disagree."""


class DegenerateMatchingError(ItelabError, RuntimeError):
    """The interior/exterior matching system is numerically singular."""


class CutoffError(ItelabError, RuntimeError):
    """Tail positivity failed above the mode cutoff."""


class UnresolvedEventError(ItelabError, RuntimeError):
    """Event refinement reached its floor without isolating an event."""


class AccountingError(ItelabError, RuntimeError):
    """The branch accounting identity failed, so an event was missed."""


class ResonanceError(ItelabError, ValueError):
    """A half-line right-hand side carries a non-decaying generator."""


class UnsupportedOrderError(ItelabError, ValueError):
    """A symbol jet or recursion was requested beyond its supported order."""


class ConfigError(ItelabError, ValueError):
    """A run configuration is malformed; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
