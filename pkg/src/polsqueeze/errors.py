"""Exception hierarchy.

Configuration problems (bad parameters, inconsistent grids) and numerical
failures (field escaping the window, non-finite values, degenerate inputs
to the detection calibration) are kept on separate branches so the CLI can
map them to distinct exit codes.
"""


class PolsqueezeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PolsqueezeError):
    """Invalid or inconsistent simulation parameters."""


class NumericalError(PolsqueezeError):
    """Numerical failure during simulation or estimation."""


class WindowEscapeError(NumericalError):
    """Pulse centroid drifted too close to the edge of the time window."""


class NonFiniteFieldError(NumericalError):
    """NaN or Inf appeared in a field envelope."""


class DegenerateMeanFieldError(NumericalError):
    """Polarization calibration got a mean field with an empty mode."""


class CovarianceError(NumericalError):
    """Covariance matrix is not positive semidefinite."""


class UnphysicalInputError(NumericalError):
    """Observed statistics are inconsistent with the stated model."""
