"""Exception types shared across the package."""


class HamromError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(HamromError):
    """Malformed or inconsistent experiment configuration."""


class NumericalError(HamromError):
    """Base class for failures of a numerical procedure."""


class DegenerateVector(NumericalError):
    """Candidate vector is numerically inside the span of the current basis."""


class RankDeficient(NumericalError):
    """A factorization step met a numerically rank-deficient pivot."""


class StagnationError(NumericalError):
    """Greedy enrichment cannot proceed: every candidate is degenerate."""


class ZeroResidual(NumericalError):
    """Interpolation index selection hit a (numerically) dependent column."""


class NewtonDivergence(NumericalError):
    """Newton iteration failed to reach the requested residual tolerance."""


class IntegrationError(NumericalError):
    """Time integration produced a non-finite state."""
