"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as a plain ValueError.
"""


class HyperzeroError(Exception):
    """Base class for all package-specific failures."""


class InvalidDiskPoint(HyperzeroError, ValueError):
    """Point does not lie strictly inside the unit disk."""


class DuplicatePoints(HyperzeroError, ValueError):
    """Two configuration points coincide within resolution."""


class PolicyInfeasible(HyperzeroError, ValueError):
    """No finite truncation degree satisfies the requested policy."""


class OutOfCertifiedDisk(HyperzeroError, ValueError):
    """Evaluation requested outside the radius certified by the tail bound."""


class LengthMismatch(HyperzeroError, ValueError):
    """Paired sequences have different lengths."""


class UnsupportedExponent(HyperzeroError, ValueError):
    """No closed form is implemented for the requested exponent."""


class NonConvergence(HyperzeroError, RuntimeError):
    """Iteration budget exhausted before certificates were met."""


class DegenerateInput(HyperzeroError, ValueError):
    """Input is identically zero or otherwise carries no information."""


class ContourTooClose(HyperzeroError, RuntimeError):
    """A zero sits too close to the integration contour to resolve."""


class QuadratureUnresolved(HyperzeroError, RuntimeError):
    """Winding number failed to settle near an integer after retries."""


class InvalidBallFamily(HyperzeroError, ValueError):
    """Ball family violates disjointness or containment preconditions."""


class InsufficientHits(HyperzeroError, RuntimeError):
    """Too few Monte Carlo hits in a cell for a meaningful estimate."""


class TrialFailure(HyperzeroError, RuntimeError):
    """A single Monte Carlo trial failed; carries trial provenance."""

    def __init__(self, message, *, trial=None, stream_index=None):
        super().__init__(message)
        self.trial = trial
        self.stream_index = stream_index


class ConfigInvalid(HyperzeroError, ValueError):
    """Experiment configuration rejected; message lists offending fields."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GeometryMismatch(HyperzeroError, ValueError):
    """Records under comparison were produced with incompatible geometry."""
