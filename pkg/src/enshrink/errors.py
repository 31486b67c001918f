"""Exception types shared across the package."""


class EnshrinkError(Exception):
    """Base class for all errors raised by this package."""


class ModelDimensionError(EnshrinkError, ValueError):
    """State dimension too small for the advection stencil."""


class IntegrationBlowupError(EnshrinkError, FloatingPointError):
    """A time integration produced non-finite values."""

    def __init__(self, time, message=None):
        self.time = time
        if message is None:
            message = "integration produced non-finite values at t=%r" % (time,)
        super().__init__(message)


class EnsembleSizeError(EnshrinkError, ValueError):
    """Ensemble has too few members for the requested operation."""


class ObservationOperatorError(EnshrinkError, ValueError):
    """Observation operator failed or returned the wrong shape."""


class InflationError(EnshrinkError, ValueError):
    """Multiplicative inflation factor below one."""


class SingularInnovationError(EnshrinkError, ValueError):
    """Innovation covariance S = Z Z^T + R is numerically singular."""


class GammaBoundError(EnshrinkError, ValueError):
    """Shrinkage weight outside the half-open interval [0, 1)."""


class InvalidScaleError(EnshrinkError, ValueError):
    """Non-positive scale for a synthetic covariance."""


class DegenerateClimatologyError(EnshrinkError, ValueError):
    """Climatological sample carries no variance."""


class ZeroCovarianceError(EnshrinkError, ValueError):
    """Whitened spectrum sums to zero; sphericity is undefined."""


class UnsupportedRError(EnshrinkError, ValueError):
    """Observation-error covariance shape not supported (diagonal required)."""


class EmptyHistogramError(EnshrinkError, ValueError):
    """Rank histogram holds no samples."""


class ConfigError(EnshrinkError, ValueError):
    """Experiment configuration failed validation."""
