"""
Error types for ruled minimal submanifold computations.
Every error carries a short code used in reports and CLI messages.
"""


class GeometryError(ValueError):
    """Base class for numeric-geometry failures"""

    code = "geometry-error"

    def __init__(self, message: str):
        super().__init__(f"[{self.code}] {message}")
        self.message = message


class UnsupportedOrderError(GeometryError):
    code = "unsupported-order"


class DomainError(GeometryError):
    code = "domain-error"


class DegenerateBasisError(GeometryError):
    code = "degenerate-basis"


class DegenerateMetricError(GeometryError):
    code = "degenerate-metric"


class NotMinimalError(GeometryError):
    code = "not-minimal"


class DegenerateFirstNormalError(GeometryError):
    code = "degenerate-first-normal"


class RankDeficientError(GeometryError):
    code = "rank-deficient"

    def __init__(self, message: str, level: int = 0):
        super().__init__(message)
        self.level = level


class SingularPointError(GeometryError):
    code = "singular-point"


class OracleUnavailableError(GeometryError):
    code = "oracle-unavailable"


class SliceRequiredError(GeometryError):
    code = "slice-required"


class IsotropyRequiredError(GeometryError):
    code = "isotropy-required"


class IntegrationDivergedError(GeometryError):
    code = "integration-diverged"


class PreconditionViolation(GeometryError):
    code = "precondition-violation"


class InvalidParametersError(GeometryError):
    code = "invalid-parameters"


class ConfigError(Exception):
    """Raised for malformed run configuration (CLI exit code 2)"""


class CatalogError(Exception):
    """Raised when a catalog entry fails its load-time verification"""
