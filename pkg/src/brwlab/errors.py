"""Exception types shared by the engines."""

from __future__ import annotations


class ParameterError(ValueError):
    """Model parameters violate ``q_minus > q_plus > 0`` or ``beta > 0``."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed.

    ``phi`` and ``point`` hold the last accepted state.
    """

    def __init__(self, message: str, phi: float, point: tuple[float, float]):
        super().__init__(f"{message} (last valid phi={phi!r}, point={point!r})")
        self.phi = phi
        self.point = point


class HorizonTooShortError(RuntimeError):
    """A shooting trajectory ended in the interior without being classified."""


class SpectralError(RuntimeError):
    """No usable eigen-direction was found."""


class InternalError(RuntimeError):
    """An invariant that should be impossible to break was broken."""
