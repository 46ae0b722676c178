# -------------------------------------------------
# Exceptions raised across the screen BEM modules.
# The runner maps them onto exit codes.
# -------------------------------------------------

from typing import List, Optional


class ScreenBemError(Exception):
    """Base class for every error raised by the library."""


class GeometryError(ScreenBemError):
    """Non-planar, overlapping or otherwise unusable screen geometry."""


class ConfigurationError(ScreenBemError):
    """
    Invalid run configuration or an unsupported space/mesh combination.

    @param violations: every problem found, so they can all be reported at once.
    """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class QuadratureError(ScreenBemError):
    """Unknown adjacency class or a rule that cannot be built."""


class DomainError(ScreenBemError, ValueError):
    """A point lies where the kernel or potential is not defined (e.g. x = y, or x on the screen)."""


class SolverError(ScreenBemError):
    """
    Singular or inaccurate dense solve.

    @param level: mesh level the failure happened on, when known.
    """

    def __init__(self, message: str, level: Optional[int] = None):
        self.level = level
        if level is not None:
            message = f"level {level}: {message}"
        super().__init__(message)


class ExtrapolationError(ScreenBemError):
    """Energy ladder that cannot be fitted by E* - C h^alpha."""
