"""Shared exception types."""


class NumericalTroubleError(RuntimeError):
    """Raised when a numerical procedure cannot continue reliably
    (singular Newton systems, non-commuting multiplication operators,
    negative atomic weights, failed reconstruction checks)."""


class DegenerateMassError(ValueError):
    """Raised when a moment functional has (numerically) no mass:
    L(1) below tolerance, so the point map L(x)/L(1) is undefined."""


class MissingHintError(ValueError):
    """Raised when a parameter-selection recipe has no applicable branch
    for the given problem and hints."""


class OptimumKnownSignal(Exception):
    """Signal (not an error): parameter selection short-circuited because the
    optimal value is already known analytically (e.g. zero numerator at a
    feasible point forces optimal ratio 0)."""

    def __init__(self, r_star: float, point=None):
        super().__init__(f"optimal value known: {r_star}")
        self.r_star = r_star
        self.point = point
