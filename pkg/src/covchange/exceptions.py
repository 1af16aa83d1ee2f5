"""Exception and warning types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical-domain failures with 3.
"""


class CovChangeError(Exception):
    """Base class for all covchange errors."""


class ConfigurationError(CovChangeError):
    """Invalid configuration: bad dimensions, parameters, or config files."""


class NumericalDomainError(CovChangeError):
    """Input left the numerical domain an operation is defined on."""


class ModelFidelityError(NumericalDomainError):
    """A synthesized model matrix is too far from physically valid.

    Raised when the one-ring quadrature produces a matrix whose negative
    eigenvalues are too large to repair silently.
    """


class CalibrationError(NumericalDomainError):
    """Threshold calibration failed to bracket or converge."""


class DegenerateHypothesesError(NumericalDomainError):
    """The two hypothesized covariances coincide; the test is undefined."""


class DegenerateHypothesesWarning(UserWarning):
    """The two hypothesized covariances coincide; the statistic is identically 0."""
