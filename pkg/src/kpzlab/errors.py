"""Exception taxonomy shared by all modules."""


class KpzlabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(KpzlabError):
    """A precondition on window geometry, roots, or parameters is violated."""


class OrderingError(KpzlabError):
    """Lattice points are not ordered as required (p <= q coordinate-wise)."""


class ConsistencyError(KpzlabError):
    """An internal invariant failed (e.g. a nonpositive dual weight).

    This always indicates a bug upstream, never a recoverable condition;
    values are never clamped to hide it.
    """


class InsufficientDataError(KpzlabError):
    """Too few samples for the requested statistic."""


class EstimatorError(KpzlabError):
    """Degenerate input to a regression or box-counting estimator."""


class InsufficientCertificationError(KpzlabError):
    """A duality comparison was requested but the certified regions do not
    intersect.  Carries the two offending certificates."""

    def __init__(self, message, primal_certificate=None, dual_certificate=None):
        super().__init__(message)
        self.primal_certificate = primal_certificate
        self.dual_certificate = dual_certificate
