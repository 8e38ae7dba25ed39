"""Exception hierarchy for the adsql toolkit.

Every failure mode named in an operation contract maps to one class here, so
callers can discriminate without string matching.
"""


class AdsqlError(Exception):
    """Base class for all toolkit errors."""


class GridMismatchError(AdsqlError):
    """Fields passed to an operation do not share the same SphereGrid."""


class DomainError(AdsqlError):
    """Parameter outside the admissible range (horizon, dS chart limit, ...)."""


class DegenerateDataError(AdsqlError):
    """Mean-curvature data lost its spacelike character (|H| or |H0| too small)."""


class EmbeddingError(AdsqlError):
    """An embedding produced a non-Riemannian induced metric."""


class UnsupportedFeatureError(AdsqlError):
    """Requested feature is deliberately not implemented (e.g. dS Killing basis)."""


class PreconditionError(AdsqlError):
    """An operation precondition failed (isometry mismatch, convexity, sign)."""


class ObserverError(AdsqlError):
    """Observer field is not future timelike / not reducible to the time axis."""


class ConvergenceError(AdsqlError):
    """Iterative solve exhausted its budget.  Carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class RigidityError(AdsqlError):
    """Linearized embedding operator singular beyond the rigid-motion kernel."""


class ExtractionError(AdsqlError):
    """Asymptotic coefficient fit is too ill-conditioned to trust."""


class LimitError(AdsqlError):
    """Radius extrapolation did not converge."""


class ConfigError(AdsqlError):
    """Malformed run configuration (CLI exit code 2)."""
