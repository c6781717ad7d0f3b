"""Exception types shared across the package."""


class BallWalkError(Exception):
    """Base class for all package errors."""


class UnsupportedDimensionError(BallWalkError):
    """Closed forms are only available for dimensions 1..3."""


class InvalidParameterError(BallWalkError):
    """A parameter is outside its admissible range."""


class ToleranceNotMetError(BallWalkError):
    """A quadrature or iterative scheme failed to reach its target accuracy."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class InjectivityRadiusError(BallWalkError):
    """Requested radius exceeds the manifold's trusted injectivity bound."""


class DistanceOutOfRangeError(BallWalkError):
    """Distance query outside the locally trusted range of the approximation."""


class SamplerInternalError(BallWalkError):
    """Rejection sampler exceeded its iteration bound; indicates a geometry bug."""


class ResolutionError(BallWalkError):
    """Grid resolution insufficient for the requested kernel radius."""


class IndexOutOfRangeError(BallWalkError):
    """Eigenfunction index beyond the computed range."""


class RegionError(BallWalkError):
    """Complex test point lies inside the excluded spectral region."""


class InsufficientDataError(BallWalkError):
    """Not enough samples or eigenpairs to perform the requested fit."""


class FitFailedError(BallWalkError):
    """A least-squares fit could not be performed (e.g. non-decaying curve)."""
