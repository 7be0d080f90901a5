"""Exception types shared across the package."""


class LensV2VError(Exception):
    """Base class for all package errors."""


class DomainError(LensV2VError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigError(LensV2VError):
    """A configuration value is missing, malformed, or inconsistent."""


class DegenerateGeometry(LensV2VError):
    """Two points coincide (or nearly so) where distinct points are required."""


class SingularGeometry(LensV2VError):
    """A geometric configuration makes a bound or matrix singular."""


class SingularFim(LensV2VError):
    """The Fisher information matrix is not invertible (gauge deficiency)."""


class RankError(LensV2VError):
    """A covariance or system matrix has insufficient rank."""


class GaugeDeficient(LensV2VError):
    """Anchors are insufficient to fix translation, rotation, and scale."""
