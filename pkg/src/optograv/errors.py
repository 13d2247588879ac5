"""Exception hierarchy for the gravimetry toolkit."""


class GravimetryError(Exception):
    """Base class for all toolkit-specific failures."""


class NonPositiveInput(GravimetryError, ValueError):
    """A physical input violates its positivity/range constraint."""


class FrequencyImaginary(GravimetryError, ValueError):
    """The gravity-gradient term exceeds the trap stiffness (omega^2 <= 2 g / R)."""


class TruncationInsufficient(GravimetryError):
    """The Fock-space cutoff leaves more probability mass in the tail than allowed."""


class DimensionTooLarge(GravimetryError):
    """Requested dense-oracle Hilbert space exceeds the configured cap."""


class StepTooSmall(GravimetryError):
    """Finite-difference step lost to round-off (overlap deficit below noise floor)."""


class QuadratureNotConverged(GravimetryError):
    """Successive quadrature refinements disagree beyond the requested tolerance."""


class ZeroInformation(GravimetryError, ValueError):
    """A Cramer-Rao bound was requested for zero Fisher information."""


class GridResolutionInsufficient(GravimetryError):
    """The inverse-CDF sampling grid cannot meet the interpolation-error budget."""


class MaximumOnBoundary(GravimetryError):
    """The likelihood argmax sits on the edge of the search interval."""


class FlatLikelihood(GravimetryError):
    """The log-likelihood varies too little over the search interval to estimate."""


class ConfigError(GravimetryError, ValueError):
    """Malformed or contradictory run configuration."""
