"""Exception hierarchy shared by every module."""


class QuotientTransportError(Exception):
    """Base class for all package errors."""


class ConeViolation(QuotientTransportError):
    """A spectrum left the open positive cone."""


class NotAdmissible(QuotientTransportError):
    """The modified Hessian is not positive definite.

    ``node`` carries the offending grid node (flat index) when known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SingularJacobian(QuotientTransportError):
    """The mixed Hessian ``D_xy c`` is (numerically) singular."""


class NoConvergence(QuotientTransportError):
    pass


class NotOrthogonal(QuotientTransportError):
    pass


class EmptySampleSet(QuotientTransportError):
    pass


class SingularW(QuotientTransportError):
    """The modified Hessian cannot be inverted at a boundary node."""


class LineSearchStall(QuotientTransportError):
    pass


class MaxIterations(QuotientTransportError):
    pass


class ContinuationStall(QuotientTransportError):
    pass


class ConfigError(QuotientTransportError):
    """Invalid run configuration (CLI exit code 2)."""
