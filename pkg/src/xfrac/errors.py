"""Exception hierarchy shared by all modules."""


class XfracError(Exception):
    """Base class for every error raised by the package."""


class DegenerateGeometryError(XfracError):
    pass


class OnDiscontinuityError(XfracError):
    """A point lies on a crack (within the geometric tolerance)."""


class UnsupportedGeometryError(XfracError):
    pass


class OutOfElementError(XfracError):
    pass


class ConvergenceError(XfracError):
    """An iterative procedure did not converge.

    ``residual`` carries the final residual norm, ``history`` the per-iteration norms.
    """

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class SolverFailureError(ConvergenceError):
    """Schwarz-Christoffel parameter problem did not converge."""


class CrowdingError(XfracError):
    """Prevertices collapsed below the resolvable gap."""

    def __init__(self, message, min_gap=None):
        super().__init__(message)
        self.min_gap = min_gap


class SingularSystemError(XfracError):
    pass


class NearTipError(XfracError):
    pass


class NoDirectionError(XfracError):
    """Both stress intensity factors vanish; no growth direction is defined."""


class GrowthTerminated(XfracError):
    """The new crack segment would leave the domain."""


class ValidityRangeError(XfracError):
    pass


class ExtractionDomainError(XfracError):
    pass
