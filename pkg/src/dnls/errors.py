"""Exception types shared across the package."""


class DnlsError(Exception):
    """Base class for all library-specific errors."""


class PeriodMismatch(DnlsError):
    """Forcing period does not divide the lattice time period."""


class InvalidExponent(DnlsError):
    """Power-law exponent outside the subcubic range (0, 3)."""


class EmptyCoefficients(DnlsError):
    """A coefficient list was empty."""


class SingularShift(DnlsError):
    """Factorization of the shifted operator failed; the shift did not
    clear the spectrum (internal error, should not occur for factor > 1)."""


class NoThresholdFound(DnlsError):
    """The growth scan exhausted its radius budget without the sampled
    ratio max |g| / |z|^3 dropping below the cubic threshold."""


class MissingDerivative(DnlsError):
    """Analytic Jacobian requested but the potential carries none."""


class SingularJacobian(DnlsError):
    """Newton linear solve failed outright."""


class StepUnderflow(DnlsError):
    """Homotopy step length shrank below its floor."""


class DegenerateZero(DnlsError):
    """Jacobian too close to singular for a trustworthy determinant sign."""


class CertificateInvalid(DnlsError):
    """A pipeline step required a VALID existence certificate."""


class SolveFailed(DnlsError):
    """No solver route produced a converged solution."""


class DimensionMismatch(DnlsError):
    """Solution file does not match the configured lattice."""


class DimensionTooLarge(DnlsError):
    """Realified dimension exceeds the supported desk-scale limit."""


class ConfigError(DnlsError):
    """Invalid or malformed run configuration."""
